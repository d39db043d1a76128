#include "blopt/autodiff.hpp"

#include <atomic>
#include <string>

namespace blopt::ad {

namespace {
std::atomic<std::int64_t> g_sweeps{0};
}

std::int64_t sweep_count() { return g_sweeps.load(std::memory_order_relaxed); }
void bump_sweep_count() { g_sweeps.fetch_add(1, std::memory_order_relaxed); }

}  // namespace blopt::ad

namespace blopt {

namespace {

void check_arity(const ScalarField& f, const FlatVector& lambda,
                 const FlatVector& theta) {
  if (lambda.space() != Space::Lambda || theta.space() != Space::Theta)
    throw std::invalid_argument("ScalarField: arguments must be (lambda, theta)");
  if (lambda.size() != f.dim_lambda() || theta.size() != f.dim_theta())
    throw std::invalid_argument(
        "ScalarField: dimension mismatch (expected lambda " +
        std::to_string(f.dim_lambda()) + ", theta " +
        std::to_string(f.dim_theta()) + ")");
}

ad::Ad run_body(const ScalarField& f, ad::Tape& tape, const FlatVector& lambda,
                const FlatVector& theta, const FlatVector* theta_tangent,
                const FlatVector* lambda_tangent, std::span<const double> params,
                std::vector<ad::Ad>& lam_in, std::vector<ad::Ad>& th_in) {
  lam_in.reserve(lambda.size());
  th_in.reserve(theta.size());
  for (std::size_t i = 0; i < lambda.size(); ++i)
    lam_in.push_back(ad::Ad::input(
        tape, lambda[i], lambda_tangent ? (*lambda_tangent)[i] : 0.0));
  for (std::size_t i = 0; i < theta.size(); ++i)
    th_in.push_back(ad::Ad::input(
        tape, theta[i], theta_tangent ? (*theta_tangent)[i] : 0.0));
  ad::Ad out = f.body()(lam_in, th_in, params);
  if (!std::isfinite(out.value()))
    throw NumericalError("ScalarField: non-finite value");
  return out;
}

}  // namespace

double eval(const ScalarField& f, const FlatVector& lambda,
            const FlatVector& theta, std::span<const double> params) {
  check_arity(f, lambda, theta);
  ad::Tape tape;
  std::vector<ad::Ad> lam_in, th_in;
  ad::Ad out = run_body(f, tape, lambda, theta, nullptr, nullptr, params, lam_in, th_in);
  return out.value();
}

double eval(const ScalarField& f, const FlatVector& lambda, const FlatVector& theta) {
  return eval(f, lambda, theta, f.default_params());
}

SweepResult sweep(const ScalarField& f, const FlatVector& lambda,
                  const FlatVector& theta, const FlatVector* theta_tangent,
                  const FlatVector* lambda_tangent,
                  std::span<const double> params) {
  check_arity(f, lambda, theta);
  if (theta_tangent &&
      (theta_tangent->space() != Space::Theta || theta_tangent->size() != theta.size()))
    throw std::invalid_argument("sweep: theta tangent mismatch");
  if (lambda_tangent && (lambda_tangent->space() != Space::Lambda ||
                         lambda_tangent->size() != lambda.size()))
    throw std::invalid_argument("sweep: lambda tangent mismatch");

  ad::Tape tape;
  std::vector<ad::Ad> lam_in, th_in;
  ad::Ad out = run_body(f, tape, lambda, theta, theta_tangent, lambda_tangent,
                        params, lam_in, th_in);

  std::vector<double> gt(theta.size(), 0.0), gl(lambda.size(), 0.0);
  std::vector<double> dgt(theta.size(), 0.0), dgl(lambda.size(), 0.0);
  if (out.taped()) {
    tape.run_backward(out.index());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const ad::Dual a = tape.adjoint(th_in[i].index());
      gt[i] = a.v;
      dgt[i] = a.t;
    }
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const ad::Dual a = tape.adjoint(lam_in[i].index());
      gl[i] = a.v;
      dgl[i] = a.t;
    }
  }
  ad::bump_sweep_count();

  SweepResult r{out.value(), FlatVector(Space::Theta, std::move(gt)),
                FlatVector(Space::Lambda, std::move(gl)),
                FlatVector(Space::Theta, std::move(dgt)),
                FlatVector(Space::Lambda, std::move(dgl))};
  return r;
}

FlatVector grad_theta(const ScalarField& f, const FlatVector& lambda,
                      const FlatVector& theta, std::span<const double> params) {
  return sweep(f, lambda, theta, nullptr, nullptr, params).grad_theta;
}
FlatVector grad_theta(const ScalarField& f, const FlatVector& lambda,
                      const FlatVector& theta) {
  return grad_theta(f, lambda, theta, f.default_params());
}

FlatVector grad_lambda(const ScalarField& f, const FlatVector& lambda,
                       const FlatVector& theta, std::span<const double> params) {
  return sweep(f, lambda, theta, nullptr, nullptr, params).grad_lambda;
}
FlatVector grad_lambda(const ScalarField& f, const FlatVector& lambda,
                       const FlatVector& theta) {
  return grad_lambda(f, lambda, theta, f.default_params());
}

FlatVector hvp_theta(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v,
                     std::span<const double> params) {
  return sweep(f, lambda, theta, &v, nullptr, params).dgrad_theta;
}
FlatVector hvp_theta(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v) {
  return hvp_theta(f, lambda, theta, v, f.default_params());
}

FlatVector mixed_vhp(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v,
                     std::span<const double> params) {
  return sweep(f, lambda, theta, &v, nullptr, params).dgrad_lambda;
}
FlatVector mixed_vhp(const ScalarField& f, const FlatVector& lambda,
                     const FlatVector& theta, const FlatVector& v) {
  return mixed_vhp(f, lambda, theta, v, f.default_params());
}

}  // namespace blopt
