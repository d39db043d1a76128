#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "blopt/autodiff.hpp"
#include "blopt/flat_vector.hpp"

namespace blopt {

using Rng = std::mt19937_64;

struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

// How the first inner iterate is produced, and therefore what d(theta_0)/d(lambda) is.
struct InitPolicy {
  enum class Kind { IndependentFixed, IndependentRandom, IdentityOfLambda };

  static InitPolicy independent_fixed(FlatVector theta0) {
    InitPolicy p;
    p.kind = Kind::IndependentFixed;
    p.fixed = std::move(theta0);
    return p;
  }
  static InitPolicy independent_random(Box box, std::uint64_t seed) {
    InitPolicy p;
    p.kind = Kind::IndependentRandom;
    p.random_box = box;
    p.seed = seed;
    return p;
  }
  static InitPolicy identity_of_lambda() {
    InitPolicy p;
    p.kind = Kind::IdentityOfLambda;
    return p;
  }

  Kind kind = Kind::IndependentFixed;
  std::optional<FlatVector> fixed;
  Box random_box{0.0, 1.0};
  std::uint64_t seed = 0;
};

// A bi-level problem instance. The inner energy is inner_loss / temperature;
// the distribution normalizer never appears because every consumer works with
// gradients of the log-density only. Immutable after construction.
class BloProblem {
 public:
  using NoiseHook = std::function<std::vector<double>(Rng&)>;

  BloProblem(ScalarField outer, ScalarField inner_loss, double temperature,
             InitPolicy init)
      : outer_(std::move(outer)),
        inner_(std::move(inner_loss)),
        temperature_(temperature),
        init_(std::move(init)) {
    if (!(temperature_ > 0.0))
      throw std::invalid_argument("BloProblem: temperature must be > 0");
    if (outer_.dim_lambda() != inner_.dim_lambda() ||
        outer_.dim_theta() != inner_.dim_theta())
      throw std::invalid_argument("BloProblem: outer/inner dimension mismatch");
    if (init_.kind == InitPolicy::Kind::IdentityOfLambda &&
        dim_lambda() != dim_theta())
      throw std::invalid_argument(
          "BloProblem: identity init requires dim(lambda) == dim(theta)");
  }

  const ScalarField& outer() const { return outer_; }
  const ScalarField& inner_loss() const { return inner_; }
  double temperature() const { return temperature_; }
  std::size_t dim_lambda() const { return outer_.dim_lambda(); }
  std::size_t dim_theta() const { return outer_.dim_theta(); }
  const InitPolicy& init_policy() const { return init_; }

  void set_noise_hook(NoiseHook hook) { noise_hook_ = std::move(hook); }
  bool has_noise_hook() const { return static_cast<bool>(noise_hook_); }
  void set_theta_box(Box b) { theta_box_ = b; }
  void set_lambda_box(Box b) { lambda_box_ = b; }
  const std::optional<Box>& theta_box() const { return theta_box_; }
  const std::optional<Box>& lambda_box() const { return lambda_box_; }
  void set_known_solution(FlatVector lambda_star, FlatVector theta_star) {
    known_solution_.emplace(std::move(lambda_star), std::move(theta_star));
  }
  const std::optional<std::pair<FlatVector, FlatVector>>& known_solution() const {
    return known_solution_;
  }

  // Inner-loss parameters for one gradient call: fresh draw through the noise
  // hook when present, the field defaults otherwise.
  std::vector<double> resolve_inner_params(Rng& rng) const {
    if (noise_hook_) return noise_hook_(rng);
    return {inner_.default_params().begin(), inner_.default_params().end()};
  }
  std::vector<double> frozen_inner_params() const {
    return {inner_.default_params().begin(), inner_.default_params().end()};
  }

  FlatVector draw_initial_theta(Rng& rng) const {
    switch (init_.kind) {
      case InitPolicy::Kind::IndependentFixed:
        return *init_.fixed;
      case InitPolicy::Kind::IndependentRandom: {
        // Mix the policy seed with the caller's stream so distinct chains get
        // distinct-but-reproducible starts.
        std::seed_seq seq{init_.seed, rng()};
        Rng init_rng(0);
        init_rng.seed(seq);
        std::uniform_real_distribution<double> u(init_.random_box.lo,
                                                 init_.random_box.hi);
        std::vector<double> v(dim_theta());
        for (double& x : v) x = u(init_rng);
        return FlatVector(Space::Theta, std::move(v));
      }
      case InitPolicy::Kind::IdentityOfLambda:
        throw std::logic_error(
            "draw_initial_theta: identity init needs the lambda iterate");
    }
    throw std::logic_error("draw_initial_theta: bad policy");
  }

  FlatVector initial_theta(const FlatVector& lambda, Rng& rng) const {
    if (init_.kind == InitPolicy::Kind::IdentityOfLambda)
      return lambda.retagged(Space::Theta);
    return draw_initial_theta(rng);
  }

  bool init_depends_on_lambda() const {
    return init_.kind == InitPolicy::Kind::IdentityOfLambda;
  }

  // v^T d(theta_0)/d(lambda): exact zero for independent policies, identity
  // re-tag for the lambda-as-initial-iterate policy. Linear cost in dims.
  FlatVector init_left_product(const FlatVector& v) const {
    if (v.space() != Space::Theta)
      throw std::invalid_argument("init_left_product: expects a theta vector");
    if (init_depends_on_lambda()) return v.retagged(Space::Lambda);
    return FlatVector::zeros(Space::Lambda, dim_lambda());
  }

  FlatVector project_theta(FlatVector theta) const {
    if (theta_box_) theta.clamp(theta_box_->lo, theta_box_->hi);
    return theta;
  }
  FlatVector project_lambda(FlatVector lambda) const {
    if (lambda_box_) lambda.clamp(lambda_box_->lo, lambda_box_->hi);
    return lambda;
  }

 private:
  ScalarField outer_;
  ScalarField inner_;
  double temperature_;
  InitPolicy init_;
  NoiseHook noise_hook_;
  std::optional<Box> theta_box_;
  std::optional<Box> lambda_box_;
  std::optional<std::pair<FlatVector, FlatVector>> known_solution_;
};

// d(log p)/d(theta) = -(1/tau) dL_T/d(theta), with the noise hook resolved
// through `rng` before taping.
FlatVector inner_logp_grad(const BloProblem& p, const FlatVector& lambda,
                           const FlatVector& theta, Rng& rng);
FlatVector inner_logp_grad_with(const BloProblem& p, const FlatVector& lambda,
                                const FlatVector& theta,
                                std::span<const double> params);

// ---------------------------------------------------------------------------
// Problem factories
// ---------------------------------------------------------------------------

// 1-D problem with inner optimum sqrt(1 - lambda^2) on the unit box.
BloProblem make_synth1d(double temperature = 1.0);

// Same losses with the two cubic coefficients perturbed uniformly in
// [-0.3, 0.3] at every inner-gradient call. With the hook never invoked the
// problem coincides with make_synth1d.
BloProblem make_noisy_synth1d(std::uint64_t seed, double temperature = 1.0);

// Cubic-regression toy. The tabular spec enumerates, for each lambda on a
// 21-point grid, the one-parameter family of zero-training-loss solutions at
// 11 grid values of the free coefficient.
struct TabularToySpec {
  std::vector<double> lambda_grid;          // 21 values in [-1, 1]
  std::vector<double> free_param_grid;      // 11 values of theta_2 in [-1, 1]
  std::vector<double> val_loss;             // row-major [lambda][free], L_V at each optimum
  std::vector<double> theta_solutions;      // row-major [lambda][free][3]
  std::size_t rows() const { return lambda_grid.size(); }
  std::size_t cols() const { return free_param_grid.size(); }
  double loss(std::size_t r, std::size_t c) const { return val_loss[r * cols() + c]; }
};

struct PolyToy {
  BloProblem problem;
  TabularToySpec tabular;
};
PolyToy make_poly_toy(double temperature = 1.0);

// Convex quadratic bi-level pair with closed-form inner solution, used as the
// analytic oracle for every estimator. H has eigenvalues spanning
// [1/condition, 1]; C = rho * G * H with orthonormal-row G so the inner
// solve map theta*(lambda) = -H^{-1} C^T lambda = -rho G^T lambda stays
// bounded for any conditioning. Outer targets are placed at a seeded optimum
// so the problem has a known minimizer with zero gradient.
struct QuadraticInfo {
  std::size_t dim_theta = 0;
  std::size_t dim_lambda = 0;
  std::vector<double> hessian;      // row-major dim_theta x dim_theta
  std::vector<double> coupling;     // row-major dim_lambda x dim_theta (C)
  std::vector<double> theta_target; // t
  std::vector<double> lambda_target;// s
  double eig_min = 0.0;
  double eig_max = 0.0;

  FlatVector theta_star(const FlatVector& lambda) const;
  FlatVector lambda_star() const;
  // Analytic d/dlambda [ L_V(lambda, theta*(lambda)) ].
  FlatVector hypergrad(const FlatVector& lambda) const;
  double outer_at_inner_optimum(const FlatVector& lambda) const;
};

struct QuadraticBlo {
  BloProblem problem;
  QuadraticInfo info;
};
QuadraticBlo make_quadratic_blo(std::size_t dim_theta, std::size_t dim_lambda,
                                double condition_number, std::uint64_t seed,
                                double temperature = 1.0, double coupling_scale = 0.3);

// Per-weight L1-regularized 2-10-2 tanh classifier on two seeded Gaussian
// blobs (64 train / 64 val points). dim(theta) = dim(lambda) = 50; the L1
// coefficients are softplus(lambda_j) so lambda is unconstrained.
BloProblem make_tiny_mlp_l1(std::uint64_t seed, double temperature = 1.0);

// Problem lookup by CLI name: synth1d | noisy-synth1d | poly-toy | quadratic
// | tiny-mlp-l1. Throws std::invalid_argument listing valid names.
std::vector<std::string> problem_names();

}  // namespace blopt
