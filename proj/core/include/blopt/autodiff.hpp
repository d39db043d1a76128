#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "blopt/flat_vector.hpp"

namespace blopt::ad {

// Value plus forward tangent. Pushing duals through the tape and its backward
// sweep yields gradients (value part of adjoints) and directional derivatives
// of gradients (tangent part), which is all the second-order information the
// estimators contract against.
struct Dual {
  double v = 0.0;
  double t = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.t + b.t}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.t - b.t}; }
inline Dual operator-(Dual a) { return {-a.v, -a.t}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.v * b.t + a.t * b.v}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.t}; }
inline Dual inv(Dual a) {
  const double r = 1.0 / a.v;
  return {r, -a.t * r * r};
}
inline Dual operator/(Dual a, Dual b) { return a * inv(b); }

// Number of gradient sweeps (taped evaluation + backward pass) performed
// process-wide. One sweep is one "derivative product" in the complexity
// accounting.
std::int64_t sweep_count();
void bump_sweep_count();

// Recording tape for one evaluation. Fresh per call; no cross-call reuse.
class Tape {
 public:
  int add_input(double value, double tangent) {
    nodes_.push_back(Node{-1, -1, Dual{}, Dual{}});
    val_.push_back(Dual{value, tangent});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int record(int a, int b, Dual value, Dual da, Dual db) {
    nodes_.push_back(Node{a, b, da, db});
    val_.push_back(value);
    return static_cast<int>(nodes_.size()) - 1;
  }
  const Dual& value(int i) const { return val_[static_cast<std::size_t>(i)]; }

  void run_backward(int root) {
    adj_.assign(val_.size(), Dual{});
    adj_[static_cast<std::size_t>(root)] = Dual{1.0, 0.0};
    for (int i = root; i >= 0; --i) {
      const Dual& a = adj_[static_cast<std::size_t>(i)];
      if (a.v == 0.0 && a.t == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.a >= 0) adj_[static_cast<std::size_t>(n.a)] = adj_[static_cast<std::size_t>(n.a)] + n.da * a;
      if (n.b >= 0) adj_[static_cast<std::size_t>(n.b)] = adj_[static_cast<std::size_t>(n.b)] + n.db * a;
    }
  }
  const Dual& adjoint(int i) const { return adj_[static_cast<std::size_t>(i)]; }

  void reserve(std::size_t n) {
    nodes_.reserve(n);
    val_.reserve(n);
  }

 private:
  struct Node {
    int a, b;
    Dual da, db;
  };
  std::vector<Node> nodes_;
  std::vector<Dual> val_;
  std::vector<Dual> adj_;
};

// Scalar handle used inside field bodies. Constants are not recorded; mixed
// expressions record only their taped parents.
class Ad {
 public:
  Ad() = default;
  Ad(double c) : val_{c, 0.0} {}  // NOLINT(google-explicit-constructor)

  static Ad input(Tape& tape, double value, double tangent) {
    Ad x;
    x.tape_ = &tape;
    x.idx_ = tape.add_input(value, tangent);
    x.val_ = Dual{value, tangent};
    return x;
  }

  bool taped() const { return tape_ != nullptr; }
  double value() const { return val_.v; }
  double tangent() const { return val_.t; }
  Dual dual() const { return val_; }
  int index() const { return idx_; }
  Tape* tape() const { return tape_; }

  friend Ad operator+(const Ad& a, const Ad& b) {
    return binary(a, b, a.val_ + b.val_, Dual{1, 0}, Dual{1, 0});
  }
  friend Ad operator-(const Ad& a, const Ad& b) {
    return binary(a, b, a.val_ - b.val_, Dual{1, 0}, Dual{-1, 0});
  }
  friend Ad operator-(const Ad& a) { return unary(a, -a.val_, Dual{-1, 0}); }
  friend Ad operator*(const Ad& a, const Ad& b) {
    return binary(a, b, a.val_ * b.val_, b.val_, a.val_);
  }
  friend Ad operator/(const Ad& a, const Ad& b) {
    const Dual ib = inv(b.val_);
    return binary(a, b, a.val_ * ib, ib, -(a.val_ * ib * ib));
  }

  Ad& operator+=(const Ad& o) { return *this = *this + o; }
  Ad& operator-=(const Ad& o) { return *this = *this - o; }
  Ad& operator*=(const Ad& o) { return *this = *this * o; }

  friend Ad pow(const Ad& a, double p) {
    const double vp = std::pow(a.val_.v, p);
    const double d1 = p * std::pow(a.val_.v, p - 1.0);
    const double d2 = p * (p - 1.0) * std::pow(a.val_.v, p - 2.0);
    return unary(a, Dual{vp, d1 * a.val_.t}, Dual{d1, d2 * a.val_.t});
  }
  friend Ad exp(const Ad& a) {
    const double e = std::exp(a.val_.v);
    const Dual val{e, e * a.val_.t};
    return unary(a, val, val);
  }
  friend Ad log(const Ad& a) {
    const double r = 1.0 / a.val_.v;
    return unary(a, Dual{std::log(a.val_.v), r * a.val_.t},
                 Dual{r, -r * r * a.val_.t});
  }
  friend Ad log1p(const Ad& a) {
    const double r = 1.0 / (1.0 + a.val_.v);
    return unary(a, Dual{std::log1p(a.val_.v), r * a.val_.t},
                 Dual{r, -r * r * a.val_.t});
  }
  friend Ad tanh(const Ad& a) {
    const double th = std::tanh(a.val_.v);
    const double sech2 = 1.0 - th * th;
    return unary(a, Dual{th, sech2 * a.val_.t},
                 Dual{sech2, -2.0 * th * sech2 * a.val_.t});
  }
  friend Ad sqrt(const Ad& a) { return pow(a, 0.5); }
  // |x| with subgradient 0 at x = 0; second derivative taken as 0 everywhere.
  friend Ad abs(const Ad& a) {
    const double s = a.val_.v > 0.0 ? 1.0 : (a.val_.v < 0.0 ? -1.0 : 0.0);
    return unary(a, Dual{std::abs(a.val_.v), s * a.val_.t}, Dual{s, 0.0});
  }

 private:
  static Ad unary(const Ad& a, Dual value, Dual da) {
    Ad r;
    r.val_ = value;
    if (a.tape_) {
      r.tape_ = a.tape_;
      r.idx_ = a.tape_->record(a.idx_, -1, value, da, Dual{});
    }
    return r;
  }
  static Ad binary(const Ad& a, const Ad& b, Dual value, Dual da, Dual db) {
    Ad r;
    r.val_ = value;
    Tape* tape = a.tape_ ? a.tape_ : b.tape_;
    if (!tape) return r;  // constant fold
    if (a.tape_ && b.tape_ && a.tape_ != b.tape_)
      throw std::logic_error("Ad: operands from different tapes");
    r.tape_ = tape;
    r.idx_ = tape->record(a.tape_ ? a.idx_ : -1, b.tape_ ? b.idx_ : -1, value,
                          da, db);
    return r;
  }

  Tape* tape_ = nullptr;
  int idx_ = -1;
  Dual val_{};
};

inline Ad dot(std::span<const Ad> a, std::span<const Ad> b) {
  if (a.size() != b.size()) throw std::invalid_argument("ad::dot: size mismatch");
  Ad s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Ad sum(std::span<const Ad> a) {
  Ad s = 0.0;
  for (const Ad& x : a) s += x;
  return s;
}

// Numerically stable log(1 + e^x).
inline Ad softplus(const Ad& x) {
  if (x.value() > 0.0) return x + log1p(exp(-x));
  return log1p(exp(x));
}

// log sum exp with the max subtracted as a constant; gradient is softmax.
inline Ad logsumexp(std::span<const Ad> xs) {
  double m = xs[0].value();
  for (const Ad& x : xs) m = std::max(m, x.value());
  Ad s = 0.0;
  for (const Ad& x : xs) s += exp(x - m);
  return Ad(m) + log(s);
}

}  // namespace blopt::ad

namespace blopt {

// Scalar function of (lambda, theta) built from taped primitives. The body is
// re-run on a fresh tape for each evaluation, so calls are deterministic and
// re-entrant. `params` carries problem data a noise hook may resample; they
// are plain constants to the tape.
class ScalarField {
 public:
  using Body = std::function<ad::Ad(std::span<const ad::Ad> lambda,
                                    std::span<const ad::Ad> theta,
                                    std::span<const double> params)>;

  ScalarField(std::size_t dim_lambda, std::size_t dim_theta, Body body,
              std::vector<double> params = {})
      : dim_lambda_(dim_lambda),
        dim_theta_(dim_theta),
        body_(std::move(body)),
        params_(std::move(params)) {}

  std::size_t dim_lambda() const { return dim_lambda_; }
  std::size_t dim_theta() const { return dim_theta_; }
  std::span<const double> default_params() const { return params_; }
  const Body& body() const { return body_; }

 private:
  std::size_t dim_lambda_;
  std::size_t dim_theta_;
  Body body_;
  std::vector<double> params_;
};

// One forward-over-reverse pass: gradients of the field and, when a tangent
// seed was given, the directional derivatives of those gradients.
struct SweepResult {
  double value = 0.0;
  FlatVector grad_theta;
  FlatVector grad_lambda;
  FlatVector dgrad_theta;   // tangent of grad_theta; zero without a seed
  FlatVector dgrad_lambda;  // tangent of grad_lambda
};

double eval(const ScalarField& f, const FlatVector& lambda, const FlatVector& theta);
double eval(const ScalarField& f, const FlatVector& lambda, const FlatVector& theta,
            std::span<const double> params);

FlatVector grad_theta(const ScalarField& f, const FlatVector& lambda,
                      const FlatVector& theta);
FlatVector grad_theta(const ScalarField& f, const FlatVector& lambda,
                      const FlatVector& theta, std::span<const double> params);
FlatVector grad_lambda(const ScalarField& f, const FlatVector& lambda,
                       const FlatVector& theta);
FlatVector grad_lambda(const ScalarField& f, const FlatVector& lambda,
                       const FlatVector& theta, std::span<const double> params);

// v . d2f/dtheta2, computed by seeding v as the theta tangent.
FlatVector hvp_theta(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v);
FlatVector hvp_theta(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v,
                     std::span<const double> params);

// d/dlambda of the scalar v . df/dtheta with v held constant; lands in
// lambda space without materializing the mixed second-derivative matrix.
FlatVector mixed_vhp(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v);
FlatVector mixed_vhp(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v,
                     std::span<const double> params);

// Full sweep with optional tangent seeds on either space.
SweepResult sweep(const ScalarField& f, const FlatVector& lambda,
                  const FlatVector& theta, const FlatVector* theta_tangent,
                  const FlatVector* lambda_tangent,
                  std::span<const double> params);

}  // namespace blopt
