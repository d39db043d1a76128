#include "blopt/sgld.hpp"

#include <cmath>

namespace blopt {

void check_divergence(const FlatVector& theta) {
  if (!theta.all_finite() || theta.norm_inf() > kDivergenceLimit)
    throw NumericalError("sgld: chain diverged (iterate out of range)");
}

FlatVector draw_sgld_noise(std::size_t dim, double kappa, Rng& rng) {
  std::vector<double> z(dim, 0.0);
  if (kappa > 0.0) {
    std::normal_distribution<double> gauss(0.0, kappa);
    for (double& x : z) x = gauss(rng);
  }
  return FlatVector(Space::Theta, std::move(z));
}

FlatVector sgld_step_with(const BloProblem& problem, const FlatVector& lambda,
                          const FlatVector& theta, double eps,
                          std::span<const double> params, const FlatVector& z) {
  if (!(eps > 0.0)) throw std::invalid_argument("sgld_step: eps must be > 0");
  const FlatVector drift = inner_logp_grad_with(problem, lambda, theta, params);
  FlatVector next = theta;
  next.axpy(eps / 2.0, drift);
  next.axpy(std::sqrt(eps), z);
  next = problem.project_theta(std::move(next));
  check_divergence(next);
  return next;
}

FlatVector sgld_step(const BloProblem& problem, const FlatVector& lambda,
                     const FlatVector& theta, double eps, double kappa, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("sgld_step: eps must be > 0");
  if (kappa < 0.0) throw std::invalid_argument("sgld_step: kappa must be >= 0");
  const std::vector<double> params = problem.resolve_inner_params(rng);
  const FlatVector z = draw_sgld_noise(theta.size(), kappa, rng);
  return sgld_step_with(problem, lambda, theta, eps, params, z);
}

ChainTrace run_chain(const BloProblem& problem, const FlatVector& lambda,
                     const SgldConfig& cfg, RetainPolicy retain) {
  cfg.validate();
  Rng rng(cfg.seed);

  ChainTrace trace;
  trace.seed = cfg.seed;
  trace.burn_in = cfg.burn_in;

  FlatVector theta = problem.project_theta(problem.initial_theta(lambda, rng));
  if (retain == RetainPolicy::All) trace.iterates.push_back(theta);

  for (int m = 1; m <= cfg.total_steps(); ++m) {
    std::vector<double> params = problem.resolve_inner_params(rng);
    FlatVector z = draw_sgld_noise(theta.size(), cfg.kappa, rng);
    FlatVector next = sgld_step_with(problem, lambda, theta, cfg.eps, params, z);
    if (retain == RetainPolicy::All) {
      trace.iterates.push_back(next);
      trace.noise.push_back(std::move(z));
      trace.step_params.push_back(std::move(params));
    } else if (m == cfg.total_steps()) {
      trace.iterates.push_back(theta);  // penultimate
      trace.iterates.push_back(next);   // final
    }
    theta = std::move(next);
  }
  return trace;
}

}  // namespace blopt
