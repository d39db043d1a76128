#pragma once

#include <cstdint>
#include <vector>

#include "blopt/flat_vector.hpp"
#include "blopt/problem.hpp"

namespace blopt {

// Inner chain settings. Total chain length is burn_in + samples.
struct SgldConfig {
  double eps = 1e-2;       // step size, > 0
  double kappa = 1.0;      // noise scale, >= 0
  int burn_in = 50;        // discarded iterates
  int samples = 50;        // retained MC samples, >= 1
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("SgldConfig: eps must be > 0");
    if (kappa < 0.0) throw std::invalid_argument("SgldConfig: kappa must be >= 0");
    if (burn_in < 0) throw std::invalid_argument("SgldConfig: burn_in must be >= 0");
    if (samples < 1) throw std::invalid_argument("SgldConfig: samples must be >= 1");
  }
  int total_steps() const { return burn_in + samples; }
};

enum class RetainPolicy { All, LastPair };

// Chain record. Under RetainPolicy::All every iterate, noise draw, and
// resolved inner-parameter vector is kept, so each transition can be replayed
// exactly; LastPair keeps only the final two iterates.
struct ChainTrace {
  std::vector<FlatVector> iterates;
  std::vector<FlatVector> noise;                // z^(m), one per step
  std::vector<std::vector<double>> step_params; // inner params per step
  std::uint64_t seed = 0;
  int burn_in = 0;
};

// Iterates with any |entry| above this abort the chain as divergent.
inline constexpr double kDivergenceLimit = 1e8;

void check_divergence(const FlatVector& theta);

// One update theta + (eps/2) dlogp/dtheta + sqrt(eps) z, projected onto the
// problem's theta box. Pure given the resolved params and noise draw.
FlatVector sgld_step_with(const BloProblem& problem, const FlatVector& lambda,
                          const FlatVector& theta, double eps,
                          std::span<const double> params, const FlatVector& z);

// Draw z ~ N(0, kappa^2 I) for one step.
FlatVector draw_sgld_noise(std::size_t dim, double kappa, Rng& rng);

// Convenience wrapper: resolves noise params and z from `rng` (params first,
// then one normal draw per coordinate) and applies the step.
FlatVector sgld_step(const BloProblem& problem, const FlatVector& lambda,
                     const FlatVector& theta, double eps, double kappa, Rng& rng);

ChainTrace run_chain(const BloProblem& problem, const FlatVector& lambda,
                     const SgldConfig& cfg, RetainPolicy retain = RetainPolicy::All);

}  // namespace blopt
