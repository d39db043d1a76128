#include "blopt/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace blopt {

namespace {

// Baselines for per-call counter accounting. Peaks are sampled at step
// boundaries, where a loop's transients have been freed and only state the
// estimator actually retains is alive.
struct CounterScope {
  long base_theta = FlatVector::live(Space::Theta);
  long base_lambda = FlatVector::live(Space::Lambda);
  std::int64_t base_sweeps = ad::sweep_count();

  void sample(EstimatorCounters& c) const {
    c.peak_retained_theta = std::max(
        c.peak_retained_theta, FlatVector::live(Space::Theta) - base_theta);
    c.peak_retained_lambda = std::max(
        c.peak_retained_lambda, FlatVector::live(Space::Lambda) - base_lambda);
  }
  void finish(EstimatorCounters& c) const {
    c.deriv_sweeps = ad::sweep_count() - base_sweeps;
  }
};

FlatVector lambda_basis(std::size_t dim, std::size_t j) {
  std::vector<double> e(dim, 0.0);
  e[j] = 1.0;
  return FlatVector(Space::Lambda, std::move(e));
}

// Conjugate gradient on v -> hvp(L_T, v) + gamma v from an explicit start.
// Returns the iterate at the last stable step; `note` reports breakdowns.
FlatVector run_cg(const BloProblem& problem, const FlatVector& lambda,
                  const FlatVector& theta_hat, const FlatVector& b, double gamma,
                  int iters, FlatVector x, Rng& rng, EstimatorCounters& counters,
                  std::string& note) {
  auto apply = [&](const FlatVector& v) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    FlatVector out = hvp_theta(problem.inner_loss(), lambda, theta_hat, v, params);
    if (gamma > 0.0) out.axpy(gamma, v);
    return out;
  };

  FlatVector r = b;
  if (x.norm2() > 0.0) r.axpy(-1.0, apply(x));
  const double scale = std::max(b.norm2(), 1e-300);
  if (r.norm2() / scale < 1e-15) return x;

  FlatVector p = r;
  double rs = r.dot(r);
  for (int k = 0; k < iters; ++k) {
    FlatVector ap = apply(p);
    const double pap = p.dot(ap);
    ++counters.aux_steps;
    if (pap <= 0.0) {
      note = "cg: non-positive curvature, stopping at last stable iterate";
      break;
    }
    const double alpha = rs / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rs_new = r.dot(r);
    if (std::sqrt(rs_new) / scale < 1e-15) break;
    p.scale(rs_new / rs);
    p += r;
    rs = rs_new;
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Inner solver
// ---------------------------------------------------------------------------

FlatVector InnerSolver::solve(const BloProblem& problem, const FlatVector& lambda,
                              Rng& rng, EstimatorCounters* counters) {
  FlatVector theta =
      (cfg_.warm_start && warm_ && warm_->size() == problem.dim_theta())
          ? *warm_
          : problem.project_theta(problem.initial_theta(lambda, rng));
  for (int t = 0; t < cfg_.steps; ++t) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector grad = grad_theta(problem.inner_loss(), lambda, theta, params);
    theta.axpy(-cfg_.lr, grad);
    theta = problem.project_theta(std::move(theta));
  }
  check_divergence(theta);
  if (counters) counters->inner_steps += cfg_.steps;
  if (cfg_.warm_start) warm_ = theta;
  return theta;
}

FlatVector solve_inner_fixed(const BloProblem& problem, const FlatVector& lambda,
                             const InnerSolveConfig& cfg, std::uint64_t noise_seed,
                             EstimatorCounters* counters) {
  Rng rng(noise_seed);
  FlatVector theta = problem.project_theta(problem.initial_theta(lambda, rng));
  for (int t = 0; t < cfg.steps; ++t) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector grad = grad_theta(problem.inner_loss(), lambda, theta, params);
    theta.axpy(-cfg.lr, grad);
    theta = problem.project_theta(std::move(theta));
  }
  check_divergence(theta);
  if (counters) counters->inner_steps += cfg.steps;
  return theta;
}

// ---------------------------------------------------------------------------
// Recursion pieces
// ---------------------------------------------------------------------------

FlatVector g0(const BloProblem& problem, const FlatVector& lambda,
              const FlatVector& theta0) {
  if (!problem.init_depends_on_lambda())
    return FlatVector::zeros(Space::Lambda, problem.dim_lambda());
  return problem.init_left_product(grad_theta(problem.outer(), lambda, theta0));
}

FlatVector gm_step(const BloProblem& problem, const FlatVector& lambda,
                   const FlatVector& theta_prev, const FlatVector& theta_curr,
                   const FlatVector& g_prev, double eps,
                   std::span<const double> params_prev) {
  const double inv_tau = 1.0 / problem.temperature();
  FlatVector g = g_prev;

  const FlatVector v = grad_theta(problem.outer(), lambda, theta_curr);
  if (problem.init_depends_on_lambda()) {
    FlatVector delta = theta_curr;
    delta -= theta_prev;
    g += problem.init_left_product(
        hvp_theta(problem.outer(), lambda, theta_prev, delta));
  }

  // One sweep of log p's gradient at theta_prev with tangent v gives both
  // contractions: tangent of the lambda-gradient is v.B, tangent of the
  // theta-gradient is A.v (A symmetric).
  const SweepResult r =
      sweep(problem.inner_loss(), lambda, theta_prev, &v, nullptr, params_prev);
  g.axpy(-(eps / 2.0) * inv_tau, r.dgrad_lambda);
  if (problem.init_depends_on_lambda()) {
    FlatVector av = r.dgrad_theta;
    av.scale(-inv_tau);
    g.axpy(eps / 2.0, problem.init_left_product(av));
  }
  if (!g.all_finite()) throw NumericalError("gm_step: non-finite carry");
  return g;
}

// ---------------------------------------------------------------------------
// HPO-SGLD
// ---------------------------------------------------------------------------

HypergradResult HpoSgldEstimator::estimate(const BloProblem& problem,
                                           const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;
  const double eps = opts_.sgld.eps;
  const double kappa = opts_.sgld.kappa;
  const int burn_in = opts_.sgld.burn_in;
  const int samples = opts_.sgld.samples;
  const double inv_tau = 1.0 / problem.temperature();
  const std::size_t dim_l = problem.dim_lambda();
  const std::size_t dim_t = problem.dim_theta();
  const bool maml = problem.init_depends_on_lambda();

  const bool probing = opts_.probe;
  if (probing && static_cast<double>(dim_l) * static_cast<double>(dim_t) >
                     opts_.probe_guard)
    throw SizeGuardError("fo_probe: dense sensitivity exceeds the size guard");

  FlatVector theta =
      (opts_.warm_start && warm_theta_ && warm_theta_->size() == dim_t)
          ? *warm_theta_
          : problem.project_theta(problem.initial_theta(lambda, rng));
  FlatVector g = g0(problem, lambda, theta);
  FlatVector h = FlatVector::zeros(Space::Lambda, dim_l);

  // Exact dense sensitivity columns, maintained only when probing.
  std::vector<FlatVector> sens;
  FlatVector h_exact = FlatVector::zeros(Space::Lambda, dim_l);
  if (probing) {
    sens.reserve(dim_l);
    for (std::size_t j = 0; j < dim_l; ++j) {
      FlatVector col = FlatVector::zeros(Space::Theta, dim_t);
      if (maml) col.set(j, 1.0);
      sens.push_back(std::move(col));
    }
  }

  HypergradResult result{std::move(h)};
  double objective_acc = 0.0;

  for (int m = 1; m <= burn_in + samples; ++m) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    FlatVector theta_next;
    {
      const FlatVector z = draw_sgld_noise(dim_t, kappa, rng);
      theta_next = sgld_step_with(problem, lambda, theta, eps, params, z);
    }

    const SweepResult f_res = sweep(problem.outer(), lambda, theta_next, nullptr,
                                    nullptr, problem.outer().default_params());
    const FlatVector& v = f_res.grad_theta;

    // The recursion's stand-in for v . d(theta_{m-1})/d(lambda).
    if (maml) {
      FlatVector delta = theta_next;
      delta -= theta;
      g += problem.init_left_product(
          hvp_theta(problem.outer(), lambda, theta, delta));
    }

    double rel_error = 0.0;
    if (probing) {
      FlatVector exact = FlatVector::zeros(Space::Lambda, dim_l);
      for (std::size_t j = 0; j < dim_l; ++j) exact.set(j, v.dot(sens[j]));
      FlatVector diff = exact;
      diff -= g;
      rel_error = diff.norm2() / std::max(exact.norm2(), 1e-12);
    }

    {
      const SweepResult r =
          sweep(problem.inner_loss(), lambda, theta, &v, nullptr, params);
      g.axpy(-(eps / 2.0) * inv_tau, r.dgrad_lambda);
      if (maml) {
        FlatVector av = r.dgrad_theta;
        av.scale(-inv_tau);
        g.axpy(eps / 2.0, problem.init_left_product(av));
      }
    }
    if (!g.all_finite()) throw NumericalError("hpo-sgld: non-finite carry");

    if (probing) {
      // Exact linearized sensitivity through the same drift; the injected
      // noise does not depend on lambda.
      for (std::size_t j = 0; j < dim_l; ++j) {
        const FlatVector ej = lambda_basis(dim_l, j);
        const SweepResult rj =
            sweep(problem.inner_loss(), lambda, theta, &sens[j], &ej, params);
        sens[j].axpy(-(eps / 2.0) * inv_tau, rj.dgrad_theta);
      }
    }

    const bool post_burn_in = m > burn_in;
    if (post_burn_in) {
      result.h.axpy(1.0 / samples, f_res.grad_lambda);
      result.h.axpy(1.0 / samples, g);
      objective_acc += f_res.value;
      if (probing) {
        FlatVector exact_total = f_res.grad_lambda;
        for (std::size_t j = 0; j < dim_l; ++j)
          exact_total.set(j, exact_total[j] + v.dot(sens[j]));
        h_exact.axpy(1.0 / samples, exact_total);
      }
    }
    if (probing) {
      double cum = 0.0;
      if (post_burn_in) {
        FlatVector diff = h_exact;
        diff -= result.h;
        cum = diff.norm2() / std::max(h_exact.norm2(), 1e-12);
      }
      result.probe.push_back(ProbeRow{m, rel_error, cum, post_burn_in});
    }
    if (opts_.track_g_norms) result.g_norms.push_back(g.norm2());

    theta = std::move(theta_next);
    ++counters.inner_steps;
    scope.sample(counters);
  }

  if (opts_.warm_start) warm_theta_ = theta;
  result.objective = objective_acc / samples;
  scope.finish(counters);
  result.counters = counters;
  return result;
}

HypergradResult fo_probe(const BloProblem& problem, const FlatVector& lambda,
                         const SgldConfig& cfg, bool warm_start, double guard) {
  HpoSgldOptions opts;
  opts.sgld = cfg;
  opts.warm_start = warm_start;
  opts.probe = true;
  opts.probe_guard = guard;
  HpoSgldEstimator estimator(opts);
  Rng rng(cfg.seed);
  return estimator.estimate(problem, lambda, rng);
}

// ---------------------------------------------------------------------------
// IFT baselines
// ---------------------------------------------------------------------------

HypergradResult IftNeumannEstimator::estimate(const BloProblem& problem,
                                              const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;
  const FlatVector theta_hat = inner_.solve(problem, lambda, rng, &counters);
  const SweepResult f_res = sweep(problem.outer(), lambda, theta_hat, nullptr,
                                  nullptr, problem.outer().default_params());

  FlatVector v = f_res.grad_theta;
  FlatVector p = v;
  const double scale = std::max(v.norm2(), 1e-300);
  for (int k = 0; k < series_len_; ++k) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector hv =
        hvp_theta(problem.inner_loss(), lambda, theta_hat, v, params);
    v.axpy(-alpha_, hv);
    p += v;
    ++counters.aux_steps;
    if (v.norm2() > 1e6 * scale)
      throw NumericalError("ift-neumann: series divergence");
  }

  const std::vector<double> params = problem.resolve_inner_params(rng);
  const FlatVector mix =
      mixed_vhp(problem.inner_loss(), lambda, theta_hat, p, params);
  HypergradResult result{f_res.grad_lambda};
  result.h.axpy(-alpha_, mix);
  result.objective = f_res.value;
  scope.sample(counters);
  scope.finish(counters);
  result.counters = counters;
  return result;
}

HypergradResult IftCgEstimator::estimate(const BloProblem& problem,
                                         const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;
  const FlatVector theta_hat = inner_.solve(problem, lambda, rng, &counters);
  const SweepResult f_res = sweep(problem.outer(), lambda, theta_hat, nullptr,
                                  nullptr, problem.outer().default_params());

  HypergradResult result{f_res.grad_lambda};
  result.objective = f_res.value;
  const FlatVector& b = f_res.grad_theta;
  if (b.norm2() > 0.0) {
    FlatVector x = run_cg(problem, lambda, theta_hat, b, gamma_, cg_iters_,
                          FlatVector::zeros(Space::Theta, problem.dim_theta()),
                          rng, counters, result.note);
    const std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector mix =
        mixed_vhp(problem.inner_loss(), lambda, theta_hat, x, params);
    result.h.axpy(-1.0, mix);
  }
  scope.sample(counters);
  scope.finish(counters);
  result.counters = counters;
  return result;
}

HypergradResult AmigoEstimator::estimate(const BloProblem& problem,
                                         const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;
  const FlatVector theta_hat = inner_.solve(problem, lambda, rng, &counters);
  const SweepResult f_res = sweep(problem.outer(), lambda, theta_hat, nullptr,
                                  nullptr, problem.outer().default_params());
  const FlatVector& b = f_res.grad_theta;

  FlatVector z = (warm_z_ && warm_z_->size() == problem.dim_theta())
                     ? *warm_z_
                     : FlatVector::zeros(Space::Theta, problem.dim_theta());
  HypergradResult result{f_res.grad_lambda};
  result.objective = f_res.value;

  if (mode_ == Mode::Cg) {
    z = run_cg(problem, lambda, theta_hat, b, 0.0, aux_steps_, std::move(z), rng,
               counters, result.note);
  } else {
    for (int t = 0; t < aux_steps_; ++t) {
      const std::vector<double> params = problem.resolve_inner_params(rng);
      FlatVector hz = hvp_theta(problem.inner_loss(), lambda, theta_hat, z, params);
      hz.axpy(-1.0, b);  // gradient of 0.5 z'Hz - b'z
      z.axpy(-aux_lr_, hz);
      ++counters.aux_steps;
      if (z.norm_inf() > kDivergenceLimit)
        throw NumericalError("amigo: auxiliary iterate diverged");
    }
  }
  warm_z_ = z;

  if (z.norm2() > 0.0) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector mix =
        mixed_vhp(problem.inner_loss(), lambda, theta_hat, z, params);
    result.h.axpy(-1.0, mix);
  }
  scope.sample(counters);
  scope.finish(counters);
  result.counters = counters;
  return result;
}

// ---------------------------------------------------------------------------
// Unrolled differentiation
// ---------------------------------------------------------------------------

HypergradResult RmdEstimator::estimate(const BloProblem& problem,
                                       const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;
  const double lr = cfg_.lr;

  FlatVector theta =
      (cfg_.warm_start && warm_theta_ && warm_theta_->size() == problem.dim_theta())
          ? *warm_theta_
          : problem.project_theta(problem.initial_theta(lambda, rng));

  if (first_order_) {
    for (int t = 0; t < cfg_.steps; ++t) {
      const std::vector<double> params = problem.resolve_inner_params(rng);
      const FlatVector grad =
          grad_theta(problem.inner_loss(), lambda, theta, params);
      theta.axpy(-lr, grad);
      theta = problem.project_theta(std::move(theta));
      ++counters.inner_steps;
      scope.sample(counters);
    }
    check_divergence(theta);
    const SweepResult f_res = sweep(problem.outer(), lambda, theta, nullptr,
                                    nullptr, problem.outer().default_params());
    HypergradResult result{f_res.grad_lambda};
    result.h += problem.init_left_product(f_res.grad_theta);
    result.objective = f_res.value;
    if (cfg_.warm_start) warm_theta_ = theta;
    scope.finish(counters);
    result.counters = counters;
    return result;
  }

  std::vector<FlatVector> trajectory;
  std::vector<std::vector<double>> step_params;
  trajectory.reserve(static_cast<std::size_t>(cfg_.steps) + 1);
  trajectory.push_back(theta);
  for (int t = 0; t < cfg_.steps; ++t) {
    std::vector<double> params = problem.resolve_inner_params(rng);
    const FlatVector grad = grad_theta(problem.inner_loss(), lambda, theta, params);
    theta.axpy(-lr, grad);
    theta = problem.project_theta(std::move(theta));
    trajectory.push_back(theta);
    step_params.push_back(std::move(params));
    ++counters.inner_steps;
    scope.sample(counters);
  }
  check_divergence(theta);
  counters.stored_iterates = static_cast<long>(trajectory.size());

  const SweepResult f_res = sweep(problem.outer(), lambda, theta, nullptr, nullptr,
                                  problem.outer().default_params());
  HypergradResult result{f_res.grad_lambda};
  result.objective = f_res.value;
  FlatVector adjoint = f_res.grad_theta;
  for (int t = cfg_.steps; t >= 1; --t) {
    const SweepResult r =
        sweep(problem.inner_loss(), lambda, trajectory[static_cast<std::size_t>(t) - 1],
              &adjoint, nullptr, step_params[static_cast<std::size_t>(t) - 1]);
    result.h.axpy(-lr, r.dgrad_lambda);
    adjoint.axpy(-lr, r.dgrad_theta);
    scope.sample(counters);
  }
  result.h += problem.init_left_product(adjoint);

  if (cfg_.warm_start) warm_theta_ = trajectory.back();
  scope.finish(counters);
  result.counters = counters;
  return result;
}

HypergradResult FmdEstimator::estimate(const BloProblem& problem,
                                       const FlatVector& lambda, Rng& rng) {
  const std::size_t dim_l = problem.dim_lambda();
  const std::size_t dim_t = problem.dim_theta();
  if (static_cast<double>(dim_l) * static_cast<double>(dim_t) > guard_)
    throw SizeGuardError("fmd: dense Jacobian of " + std::to_string(dim_l * dim_t) +
                         " entries exceeds the size guard (infeasible)");

  const CounterScope scope;
  EstimatorCounters counters;
  const double lr = cfg_.lr;
  const bool maml = problem.init_depends_on_lambda();

  FlatVector theta =
      (cfg_.warm_start && warm_theta_ && warm_theta_->size() == dim_t)
          ? *warm_theta_
          : problem.project_theta(problem.initial_theta(lambda, rng));

  std::vector<FlatVector> sens;
  sens.reserve(dim_l);
  for (std::size_t j = 0; j < dim_l; ++j) {
    FlatVector col = FlatVector::zeros(Space::Theta, dim_t);
    if (maml) col.set(j, 1.0);
    sens.push_back(std::move(col));
  }

  for (int t = 0; t < cfg_.steps; ++t) {
    const std::vector<double> params = problem.resolve_inner_params(rng);
    std::optional<FlatVector> drift;
    for (std::size_t j = 0; j < dim_l; ++j) {
      const FlatVector ej = lambda_basis(dim_l, j);
      const SweepResult r =
          sweep(problem.inner_loss(), lambda, theta, &sens[j], &ej, params);
      sens[j].axpy(-lr, r.dgrad_theta);
      if (!drift) drift = r.grad_theta;
    }
    theta.axpy(-lr, *drift);
    theta = problem.project_theta(std::move(theta));
    ++counters.inner_steps;
    scope.sample(counters);
  }
  check_divergence(theta);

  const SweepResult f_res = sweep(problem.outer(), lambda, theta, nullptr, nullptr,
                                  problem.outer().default_params());
  HypergradResult result{f_res.grad_lambda};
  result.objective = f_res.value;
  for (std::size_t j = 0; j < dim_l; ++j)
    result.h.set(j, result.h[j] + f_res.grad_theta.dot(sens[j]));

  if (cfg_.warm_start) warm_theta_ = theta;
  scope.sample(counters);
  scope.finish(counters);
  result.counters = counters;
  return result;
}

// ---------------------------------------------------------------------------
// Zeroth-order and finite-difference baselines
// ---------------------------------------------------------------------------

FlatVector es_grad(const std::function<double(const FlatVector&)>& objective,
                   const FlatVector& lambda, double sigma,
                   const std::vector<FlatVector>& draws) {
  if (!(sigma > 0.0)) throw std::invalid_argument("es_grad: sigma must be > 0");
  if (draws.empty()) throw std::invalid_argument("es_grad: need at least one draw");
  const double f0 = objective(lambda);
  FlatVector h = FlatVector::zeros(Space::Lambda, lambda.size());
  for (const FlatVector& z : draws) {
    FlatVector shifted = lambda;
    shifted.axpy(sigma, z);
    const double fz = objective(shifted);
    h.axpy((fz - f0) / (sigma * static_cast<double>(draws.size())), z);
  }
  return h;
}

HypergradResult EsEstimator::estimate(const BloProblem& problem,
                                      const FlatVector& lambda, Rng& rng) {
  const CounterScope scope;
  EstimatorCounters counters;

  // Center solve warms across outer iterations; each perturbed solve restarts
  // from the center solution with the same budget.
  const FlatVector center = inner_.solve(problem, lambda, rng, &counters);
  const double f0 = eval(problem.outer(), lambda, center);

  auto solve_from_center = [&](const FlatVector& lam) {
    FlatVector theta = center;
    for (int t = 0; t < inner_.config().steps; ++t) {
      const std::vector<double> params = problem.resolve_inner_params(rng);
      const FlatVector grad = grad_theta(problem.inner_loss(), lam, theta, params);
      theta.axpy(-inner_.config().lr, grad);
      theta = problem.project_theta(std::move(theta));
    }
    counters.inner_steps += inner_.config().steps;
    return theta;
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  FlatVector h = FlatVector::zeros(Space::Lambda, lambda.size());
  for (int i = 0; i < n_; ++i) {
    std::vector<double> zv(lambda.size());
    for (double& x : zv) x = gauss(rng);
    const FlatVector z(Space::Lambda, std::move(zv));
    FlatVector shifted = lambda;
    shifted.axpy(sigma_, z);
    shifted = problem.project_lambda(std::move(shifted));
    const FlatVector theta_s = solve_from_center(shifted);
    const double fz = eval(problem.outer(), shifted, theta_s);
    h.axpy((fz - f0) / (sigma_ * static_cast<double>(n_)), z);
    scope.sample(counters);
  }

  HypergradResult result{std::move(h)};
  result.objective = f0;
  scope.finish(counters);
  result.counters = counters;
  return result;
}

HypergradResult FdOracleEstimator::estimate(const BloProblem& problem,
                                            const FlatVector& lambda, Rng&) {
  const CounterScope scope;
  EstimatorCounters counters;
  const std::size_t dim_l = problem.dim_lambda();
  FlatVector h = FlatVector::zeros(Space::Lambda, dim_l);

  for (std::size_t j = 0; j < dim_l; ++j) {
    double f_plus = 0.0, f_minus = 0.0;
    for (int sign = 0; sign < 2; ++sign) {
      FlatVector shifted = lambda;
      shifted.set(j, lambda[j] + (sign == 0 ? delta_ : -delta_));
      const FlatVector theta_hat =
          solve_inner_fixed(problem, shifted, inner_, noise_seed_, &counters);
      const double f = eval(problem.outer(), shifted, theta_hat);
      (sign == 0 ? f_plus : f_minus) = f;
    }
    h.set(j, (f_plus - f_minus) / (2.0 * delta_));
    scope.sample(counters);
  }

  const FlatVector theta_c = solve_inner_fixed(problem, lambda, inner_, noise_seed_);
  HypergradResult result{std::move(h)};
  result.objective = eval(problem.outer(), lambda, theta_c);
  scope.finish(counters);
  result.counters = counters;
  return result;
}

std::vector<std::string> estimator_names() {
  return {"hpo-sgld", "ift-neumann", "ift-cg", "amigo-sgd", "amigo-cg",
          "rmd",      "rmd-fo",      "fmd",    "es",        "fd-oracle"};
}

}  // namespace blopt
