#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blopt/estimators.hpp"
#include "blopt/problem.hpp"

namespace blopt {

// Outer projected-GD settings. lambda_init defaults to the lambda-box
// midpoint, or zeros when the problem is unboxed.
struct OuterConfig {
  double eta = 0.005;
  int iterations = 200;
  std::optional<FlatVector> lambda_init;
  std::uint64_t seed = 0;
  std::optional<double> stop_hnorm;  // optional early stop on |h|
  // Fresh deterministic solve used to report theta at the final lambda.
  InnerSolveConfig report_solve{20000, 0.005, false};

  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("OuterConfig: eta must be > 0");
    if (iterations < 1)
      throw std::invalid_argument("OuterConfig: iterations must be >= 1");
  }
};

struct RunRecord {
  int k = 0;
  std::vector<double> lambda;
  double objective = 0.0;
  double hnorm = 0.0;
  double wall_ms = 0.0;
  long retained_vectors = 0;  // peak live vectors held by the estimator call
  long deriv_sweeps = 0;
  long inner_steps = 0;
  long aux_steps = 0;
};

struct RunTrace {
  std::vector<RunRecord> rows;
  std::optional<FlatVector> lambda_final;
  std::optional<FlatVector> theta_report;  // theta at lambda_final via fresh solve
  std::optional<double> lambda_error;      // vs known solution, 2-norm
  std::optional<double> theta_error;
  double total_wall_ms = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

FlatVector default_lambda_init(const BloProblem& problem);

RunTrace optimize(const BloProblem& problem, HypergradEstimator& estimator,
                  const OuterConfig& cfg);

}  // namespace blopt
