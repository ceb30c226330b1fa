#pragma once

#include "mdsclt/matrixcore.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mdsclt {

struct StressState {
  Matrix config;
  double stress = 0.0;
  long iteration = 0;
};

/// Sum over i < j of (delta_ij - ||X_i - X_j||)^2.
double raw_stress(const Matrix& config, const SymmetricMatrix& delta);

struct StressOptions {
  std::optional<std::uint64_t> random_seed; // unset: start from the CMDS solution
  long max_iter = 500;
  double tol = 1e-8;
};

struct StressResult {
  StressState final;
  std::vector<double> history; // stress before the first update, then after each one
  bool converged = false;
  bool coincident = false;     // some update met a zero inter-point distance
  long increases = 0;          // steps where stress rose by more than the slack
};

/// Majorization (SMACOF-style) minimizer of raw stress in d dimensions.
StressResult minimize_stress(const SymmetricMatrix& delta, Index d, const StressOptions& opts = {});

/// Slack used for the monotonicity check at a given stress level.
inline double stress_slack(double stress) { return 1e-12 * (stress > 1.0 ? stress : 1.0); }

} // namespace mdsclt
