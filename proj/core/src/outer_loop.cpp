#include "blopt/outer_loop.hpp"

#include <chrono>

namespace blopt {

FlatVector default_lambda_init(const BloProblem& problem) {
  const std::size_t n = problem.dim_lambda();
  double value = 0.0;
  if (problem.lambda_box())
    value = 0.5 * (problem.lambda_box()->lo + problem.lambda_box()->hi);
  return FlatVector(Space::Lambda, std::vector<double>(n, value));
}

RunTrace optimize(const BloProblem& problem, HypergradEstimator& estimator,
                  const OuterConfig& cfg) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;

  Rng rng(cfg.seed);
  FlatVector lambda = cfg.lambda_init ? *cfg.lambda_init : default_lambda_init(problem);
  if (lambda.size() != problem.dim_lambda())
    throw std::invalid_argument("optimize: lambda_init dimension mismatch");
  lambda = problem.project_lambda(std::move(lambda));

  RunTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto run_start = Clock::now();

  for (int k = 0; k < cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    HypergradResult res{FlatVector::zeros(Space::Lambda, problem.dim_lambda())};
    try {
      res = estimator.estimate(problem, lambda, rng);
    } catch (const NumericalError& err) {
      trace.aborted = true;
      trace.abort_reason = err.what();
      break;
    }
    lambda.axpy(-cfg.eta, res.h);
    lambda = problem.project_lambda(std::move(lambda));

    RunRecord row;
    row.k = k;
    row.lambda.assign(lambda.raw().begin(), lambda.raw().end());
    row.objective = res.objective;
    row.hnorm = res.h.norm2();
    row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    row.retained_vectors =
        res.counters.peak_retained_theta + res.counters.peak_retained_lambda;
    row.deriv_sweeps = res.counters.deriv_sweeps;
    row.inner_steps = res.counters.inner_steps;
    row.aux_steps = res.counters.aux_steps;
    trace.rows.push_back(std::move(row));

    if (cfg.stop_hnorm && res.h.norm2() < *cfg.stop_hnorm) break;
  }
  trace.total_wall_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - run_start).count();

  trace.lambda_final = lambda;
  if (!trace.aborted) {
    // Report theta at the final lambda from a fresh noise-free solve.
    const FlatVector theta =
        solve_inner_fixed(problem, lambda, cfg.report_solve, /*noise_seed=*/0);
    trace.theta_report = theta;
    if (problem.known_solution()) {
      const auto& [lam_star, theta_star] = *problem.known_solution();
      FlatVector dl = lambda;
      dl -= lam_star;
      trace.lambda_error = dl.norm2();
      FlatVector dt = theta;
      dt -= theta_star;
      trace.theta_error = dt.norm2();
    }
  }
  return trace;
}

}  // namespace blopt
