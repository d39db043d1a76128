#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blopt/flat_vector.hpp"
#include "blopt/problem.hpp"
#include "blopt/sgld.hpp"

namespace blopt {

// Raised when a dense-Jacobian method would materialize more than its entry
// budget allows.
class SizeGuardError : public std::runtime_error {
 public:
  explicit SizeGuardError(const std::string& what) : std::runtime_error(what) {}
};

struct EstimatorCounters {
  long inner_steps = 0;      // chain / gradient-descent steps taken
  long aux_steps = 0;        // series terms, CG iterations, auxiliary descent steps
  long deriv_sweeps = 0;     // taped gradient sweeps consumed by the call
  long peak_retained_theta = 0;   // live theta vectors above the entry baseline,
  long peak_retained_lambda = 0;  // sampled at step boundaries
  long stored_iterates = 0;  // trajectory storage (reverse-mode unrolling)
};

struct ProbeRow {
  int step = 0;
  double rel_error = 0.0;  // recursion vs exact gradient-times-sensitivity
  double cum_error = 0.0;  // accumulated hypergradient vs exact, post burn-in
  bool post_burn_in = false;
};

struct HypergradResult {
  FlatVector h;
  double objective = 0.0;  // estimator's own outer-loss estimate
  EstimatorCounters counters;
  std::vector<double> g_norms;  // per-step |g_m| when tracking is on
  std::vector<ProbeRow> probe;  // per-step probe rows when probing is on
  std::string note;             // non-fatal diagnostics (e.g. CG breakdown)
};

// Shared projected-GD inner solver. Warm-started instances keep the previous
// solution as the next starting iterate; the first call (or a fresh-start
// instance) begins at the problem's init policy.
struct InnerSolveConfig {
  int steps = 100;
  double lr = 0.005;
  bool warm_start = true;
};

class InnerSolver {
 public:
  explicit InnerSolver(InnerSolveConfig cfg) : cfg_(cfg) {}
  const InnerSolveConfig& config() const { return cfg_; }

  FlatVector solve(const BloProblem& problem, const FlatVector& lambda, Rng& rng,
                   EstimatorCounters* counters = nullptr);
  void reset() { warm_.reset(); }

 private:
  InnerSolveConfig cfg_;
  std::optional<FlatVector> warm_;
};

// One deterministic projected-GD pass from a fixed start with a replayable
// noise stream; used by oracles needing common random numbers.
FlatVector solve_inner_fixed(const BloProblem& problem, const FlatVector& lambda,
                             const InnerSolveConfig& cfg, std::uint64_t noise_seed,
                             EstimatorCounters* counters = nullptr);

// Same, but with the noise hook bypassed (the field's default parameters are
// used for every gradient). Reporting path for noisy problems.
FlatVector solve_inner_noise_free(const BloProblem& problem, const FlatVector& lambda,
                                  const InnerSolveConfig& cfg);

// ---------------------------------------------------------------------------
// Recursion pieces
// ---------------------------------------------------------------------------

// Initial gradient-carry: zero for lambda-independent starts, the outer
// theta-gradient re-tagged through the identity init Jacobian otherwise.
FlatVector g0(const BloProblem& problem, const FlatVector& lambda,
              const FlatVector& theta0);

// One update of the gradient-carry recursion between consecutive chain
// iterates. All second-order terms are vector contractions; nothing of size
// dim(theta) x dim(lambda) is formed. `params_prev` is the inner-noise draw of
// the step that produced theta_curr.
FlatVector gm_step(const BloProblem& problem, const FlatVector& lambda,
                   const FlatVector& theta_prev, const FlatVector& theta_curr,
                   const FlatVector& g_prev, double eps,
                   std::span<const double> params_prev);

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

class HypergradEstimator {
 public:
  virtual ~HypergradEstimator() = default;
  virtual HypergradResult estimate(const BloProblem& problem,
                                   const FlatVector& lambda, Rng& rng) = 0;
  // Drop warm state so the next call starts from the problem's init policy.
  virtual void reset() {}
  virtual std::string name() const = 0;
};

struct HpoSgldOptions {
  SgldConfig sgld;
  bool warm_start = true;
  bool track_g_norms = false;
  bool probe = false;            // maintain the exact dense sensitivity alongside
  double probe_guard = 1e6;      // max dim(theta) * dim(lambda) entries for probing
};

class HpoSgldEstimator : public HypergradEstimator {
 public:
  explicit HpoSgldEstimator(HpoSgldOptions opts) : opts_(std::move(opts)) {
    opts_.sgld.validate();
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { warm_theta_.reset(); }
  std::string name() const override { return "hpo-sgld"; }
  const HpoSgldOptions& options() const { return opts_; }

 private:
  HpoSgldOptions opts_;
  std::optional<FlatVector> warm_theta_;
};

class IftNeumannEstimator : public HypergradEstimator {
 public:
  IftNeumannEstimator(InnerSolveConfig inner, double alpha, int series_len)
      : inner_(inner), alpha_(alpha), series_len_(series_len) {
    if (series_len_ < 0) throw std::invalid_argument("ift-neumann: series length < 0");
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { inner_.reset(); }
  std::string name() const override { return "ift-neumann"; }

 private:
  InnerSolver inner_;
  double alpha_;
  int series_len_;
};

class IftCgEstimator : public HypergradEstimator {
 public:
  IftCgEstimator(InnerSolveConfig inner, double gamma, int cg_iters)
      : inner_(inner), gamma_(gamma), cg_iters_(cg_iters) {
    if (gamma_ < 0.0) throw std::invalid_argument("ift-cg: gamma < 0");
    if (cg_iters_ < 1) throw std::invalid_argument("ift-cg: iterations < 1");
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { inner_.reset(); }
  std::string name() const override { return "ift-cg"; }

 private:
  InnerSolver inner_;
  double gamma_;
  int cg_iters_;
};

class AmigoEstimator : public HypergradEstimator {
 public:
  enum class Mode { Sgd, Cg };
  AmigoEstimator(InnerSolveConfig inner, Mode mode, int aux_steps, double aux_lr)
      : inner_(inner), mode_(mode), aux_steps_(aux_steps), aux_lr_(aux_lr) {
    if (aux_steps_ < 1) throw std::invalid_argument("amigo: aux steps < 1");
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override {
    inner_.reset();
    warm_z_.reset();
  }
  std::string name() const override {
    return mode_ == Mode::Sgd ? "amigo-sgd" : "amigo-cg";
  }
  const std::optional<FlatVector>& warm_state() const { return warm_z_; }

 private:
  InnerSolver inner_;
  Mode mode_;
  int aux_steps_;
  double aux_lr_;
  std::optional<FlatVector> warm_z_;
};

// Reverse-mode differentiation of the unrolled inner descent. Stores the full
// trajectory; the backward pass runs analytically via vector products.
class RmdEstimator : public HypergradEstimator {
 public:
  RmdEstimator(InnerSolveConfig inner, bool first_order)
      : cfg_(inner), first_order_(first_order) {}
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { warm_theta_.reset(); }
  std::string name() const override { return first_order_ ? "rmd-fo" : "rmd"; }

 private:
  InnerSolveConfig cfg_;
  bool first_order_;
  std::optional<FlatVector> warm_theta_;
};

// Forward-mode differentiation carrying the dense inner-solution Jacobian,
// one theta-space column per lambda coordinate.
class FmdEstimator : public HypergradEstimator {
 public:
  FmdEstimator(InnerSolveConfig inner, double guard = 1e6)
      : cfg_(inner), guard_(guard) {}
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { warm_theta_.reset(); }
  std::string name() const override { return "fmd"; }

 private:
  InnerSolveConfig cfg_;
  double guard_;
  std::optional<FlatVector> warm_theta_;
};

// Gaussian-smoothed zeroth-order estimate of the outer loss at the inner
// solution. Uses the zero-mean baseline form z (F(x + sigma z) - F(x)) / sigma,
// which has the same expectation as the plain form with far lower variance.
class EsEstimator : public HypergradEstimator {
 public:
  EsEstimator(double sigma, int n_samples, InnerSolveConfig inner)
      : sigma_(sigma), n_(n_samples), inner_(inner) {
    if (!(sigma_ > 0.0)) throw std::invalid_argument("es: sigma must be > 0");
    if (n_ < 1) throw std::invalid_argument("es: n must be >= 1");
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  void reset() override { inner_.reset(); }
  std::string name() const override { return "es"; }

 private:
  double sigma_;
  int n_;
  InnerSolver inner_;
};

// Low-level smoothed-gradient estimate over explicit draws.
FlatVector es_grad(const std::function<double(const FlatVector&)>& objective,
                   const FlatVector& lambda, double sigma,
                   const std::vector<FlatVector>& draws);

// Central finite differences of lambda -> L_V(lambda, theta_hat(lambda)) with
// the inner solve replayed under common random numbers. Independent of every
// derivative code path.
class FdOracleEstimator : public HypergradEstimator {
 public:
  FdOracleEstimator(double delta, InnerSolveConfig inner, std::uint64_t noise_seed = 1234)
      : delta_(delta), inner_(inner), noise_seed_(noise_seed) {
    if (!(delta_ > 0.0)) throw std::invalid_argument("fd-oracle: delta must be > 0");
  }
  HypergradResult estimate(const BloProblem&, const FlatVector&, Rng&) override;
  std::string name() const override { return "fd-oracle"; }

 private:
  double delta_;
  InnerSolveConfig inner_;
  std::uint64_t noise_seed_;
};

// Runs the chain with the exact dense sensitivity tracked next to the
// recursion and returns the per-step probe record.
HypergradResult fo_probe(const BloProblem& problem, const FlatVector& lambda,
                         const SgldConfig& cfg, bool warm_start = false,
                         double guard = 1e6);

std::vector<std::string> estimator_names();

}  // namespace blopt
