#pragma once

#include "mdsclt/clt.hpp"
#include "mdsclt/matrixcore.hpp"
#include "mdsclt/noise.hpp"
#include "mdsclt/pointmodel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdsclt {

enum class Estimator { cmds, rawstress };

struct Checks {
  bool clt = true;            // theoretical covariances and normality statistics
  bool table1 = true;         // across-replicate variances of the covariance entries
  bool decomposition = false; // six-term split per replicate
  bool bounds = false;        // scaling ratios over n_list
  bool hetero_bias = false;   // bias of class means against its standard error
};

struct ExperimentConfig {
  DistributionSpec distribution = three_point_mass();
  NoiseSpec noise = NoiseSpec(Model2{UniformLaw{4.0}});
  std::vector<Index> n_list{50, 100, 500, 1000};
  Index d = 2;
  Index replicates = 500;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::cmds;
  Checks checks;

  unsigned threads = 1;
  Index normality_rows_per_class = 4; // rows per class and replicate fed to the KS pool
  Index scree_size = 8;
  std::string sample_dump_dir;        // empty: no CSV dump

  /// Throws ValidationError on replicates < 2, unsorted n_list, bad d.
  void validate() const;
};

struct NormalityResult {
  std::vector<double> marginal_stats;
  double max_stat = 0.0;
  double critical = 0.0; // 1% level for this m
  Index m = 0;
  bool pass = false;
};

struct ClassReport {
  int label = 0;
  Vector location;       // true latent position (or mean for non-mixture F)
  Vector target;         // center_scale * (location - Zbar), averaged over replicates
  double rows = 0.0;     // average class size
  Vector empirical_mean; // class mean of aligned rows, averaged over replicates
  Matrix empirical_cov;  // per-replicate class covariance of sqrt(n) deviations, averaged
  Matrix cov_entry_variances;
  Matrix pooled_cov;     // all deviations of the class pooled over replicates
  Matrix designated_cov; // one fixed row per class, across replicates
  std::optional<Matrix> theoretical_cov;
  double bias = 0.0;     // ||empirical_mean - target||
  double bias_se = 0.0;  // sqrt(u^T empirical_cov u / (n * rows)), u the bias direction
  double bias_se_replicates = 0.0; // spread of the replicate means / sqrt(R)
  std::optional<NormalityResult> normality;
};

struct DecompositionSummary {
  double median_leading_row = 0.0;   // median over rows and replicates, sqrt(n)-scaled
  double median_remainder_row = 0.0;
  double max_relative_residual = 0.0;
  Index degenerate = 0;
};

struct NReport {
  Index n = 0;
  Index replicates_ok = 0;
  Index failed = 0;
  Index stress_increases = 0;     // rawstress only: steps that raised the stress, summed over runs
  Index stress_unconverged = 0;   // rawstress only: runs that hit the iteration cap
  std::vector<ClassReport> per_class;
  Vector scree;               // leading eigenvalues of Bhat, first replicate
  double scree_threshold = 0; // n^{2/3}
  std::optional<DecompositionSummary> decomposition;
};

struct McReport {
  std::string model;
  std::string estimator;
  double center_scale = 1.0;
  Index d = 2;
  Index replicates = 0;
  std::uint64_t seed = 0;
  Checks checks;
  std::vector<NReport> per_n;
  std::optional<BoundTable> bounds;
  bool valid = true; // false when more than 1% of replicates failed at some n
  std::vector<std::string> warnings;
};

/// Deterministic in cfg; the thread count changes nothing but speed.
McReport run(const ExperimentConfig& cfg);

/// KS distance of each whitened marginal from N(0, 1), against the 1% level.
NormalityResult normality_check(const Matrix& samples);

/// 128 points of the level curve of N(mean, cov) at probability `level`.
Matrix ellipse_points(const Vector& mean, const Matrix& cov, double level = 0.95);

struct BiasRow {
  Index n = 0;
  std::vector<double> bias;
  std::vector<double> se;
  std::vector<double> ratio;
  double mean_bias = 0.0;
};

struct HeteroBiasReport {
  std::string model;
  std::vector<BiasRow> rows;
  double min_ratio_at_largest = 0.0;
  double max_ratio_at_largest = 0.0;
  bool bias_persists = false;   // every class above 5 standard errors at the largest n
  bool trend_to_zero = true;    // mean bias at the largest n below half the smallest-n value
};

/// Runs cfg (point-mass mixture required) and reports class-mean bias per n.
HeteroBiasReport hetero_bias_experiment(ExperimentConfig cfg);

} // namespace mdsclt
