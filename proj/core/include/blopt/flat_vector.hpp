#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blopt {

// Thrown when a computation produces non-finite values or diverges.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Which argument slot of a scalar field a vector belongs to. Vectors in
// different spaces never mix in arithmetic.
enum class Space { Theta, Lambda };

inline const char* space_name(Space s) {
  return s == Space::Theta ? "theta" : "lambda";
}

// Dense real vector tagged with its variable space. All entries are finite
// on construction and stay finite through every arithmetic member; live
// instances are counted per space so estimators can assert memory behavior.
class FlatVector {
 public:
  FlatVector(Space space, std::vector<double> values)
      : space_(space), v_(std::move(values)) {
    check_finite();
    live_count(space_).fetch_add(1, std::memory_order_relaxed);
  }

  static FlatVector zeros(Space space, std::size_t n) {
    return FlatVector(space, std::vector<double>(n, 0.0));
  }

  FlatVector(const FlatVector& other) : space_(other.space_), v_(other.v_) {
    live_count(space_).fetch_add(1, std::memory_order_relaxed);
  }
  FlatVector(FlatVector&& other) noexcept
      : space_(other.space_), v_(std::move(other.v_)) {
    live_count(space_).fetch_add(1, std::memory_order_relaxed);
  }
  FlatVector& operator=(const FlatVector& other) {
    if (this != &other) {
      adjust_space(other.space_);
      v_ = other.v_;
    }
    return *this;
  }
  FlatVector& operator=(FlatVector&& other) noexcept {
    if (this != &other) {
      adjust_space(other.space_);
      v_ = std::move(other.v_);
    }
    return *this;
  }
  ~FlatVector() { live_count(space_).fetch_sub(1, std::memory_order_relaxed); }

  Space space() const { return space_; }
  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const { return v_; }
  const std::vector<double>& raw() const { return v_; }

  void set(std::size_t i, double x) {
    if (!std::isfinite(x)) throw NumericalError("FlatVector::set: non-finite entry");
    v_[i] = x;
  }

  FlatVector& operator+=(const FlatVector& o) {
    require_same(o, "operator+=");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    check_finite();
    return *this;
  }
  FlatVector& operator-=(const FlatVector& o) {
    require_same(o, "operator-=");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    check_finite();
    return *this;
  }
  FlatVector& scale(double a) {
    for (double& x : v_) x *= a;
    check_finite();
    return *this;
  }
  // this += a * x
  FlatVector& axpy(double a, const FlatVector& x) {
    require_same(x, "axpy");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
    check_finite();
    return *this;
  }

  friend FlatVector operator+(FlatVector a, const FlatVector& b) { return a += b; }
  friend FlatVector operator-(FlatVector a, const FlatVector& b) { return a -= b; }
  friend FlatVector operator*(double a, FlatVector x) { return x.scale(a); }

  double dot(const FlatVector& o) const {
    require_same(o, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) s += v_[i] * o.v_[i];
    return s;
  }
  double norm2() const { return std::sqrt(dot(*this)); }
  double norm_inf() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  // Same data, other space tag. Used by init-Jacobian contractions where a
  // theta-space product lands in lambda space.
  FlatVector retagged(Space s) const {
    std::vector<double> copy = v_;
    return FlatVector(s, std::move(copy));
  }

  void clamp(double lo, double hi) {
    for (double& x : v_) x = std::min(hi, std::max(lo, x));
  }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static long live(Space s) { return live_count(s).load(std::memory_order_relaxed); }

 private:
  void check_finite() const {
    if (!all_finite())
      throw NumericalError(std::string("FlatVector(") + space_name(space_) +
                           "): non-finite entry");
  }
  void require_same(const FlatVector& o, const char* op) const {
    if (space_ != o.space_)
      throw std::invalid_argument(std::string("FlatVector::") + op +
                                  ": space mismatch (" + space_name(space_) +
                                  " vs " + space_name(o.space_) + ")");
    if (v_.size() != o.v_.size())
      throw std::invalid_argument(std::string("FlatVector::") + op +
                                  ": dimension mismatch");
  }
  void adjust_space(Space s) {
    if (s != space_) {
      live_count(space_).fetch_sub(1, std::memory_order_relaxed);
      live_count(s).fetch_add(1, std::memory_order_relaxed);
      space_ = s;
    }
  }
  static std::atomic<long>& live_count(Space s) {
    static std::atomic<long> theta{0};
    static std::atomic<long> lambda{0};
    return s == Space::Theta ? theta : lambda;
  }

  Space space_;
  std::vector<double> v_;
};

}  // namespace blopt
