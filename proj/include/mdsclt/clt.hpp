#pragma once

#include "mdsclt/matrixcore.hpp"
#include "mdsclt/noise.hpp"
#include "mdsclt/pointmodel.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdsclt {

// ---------------------------------------------------------------------------
// Limiting covariances
// ---------------------------------------------------------------------------

struct ClassCov {
  Vector z;     // latent location the covariance is evaluated at
  Matrix sigma; // d x d limiting covariance of sqrt(n)[(X W)_i - c (Z_i - Zbar)]
};

struct TheoryCov {
  NoiseModel model = NoiseModel::model1;
  std::vector<ClassCov> per_class;
  double center_scale = 1.0; // c above: 1 for models 1-2, sqrt(q) for model 3
};

struct TheoryOptions {
  std::optional<double> q_n;         // overrides the model-3 q
  std::vector<Vector> z_list;        // evaluation points for non-mixture F
  Index mc_draws = 200000;
  std::uint64_t seed = 0;
};

/// Model 1: (sigma^2/4) Xi^{-1}, z-free. Models 2 and 3:
/// Xi^{-1} SigmaTilde(z) Xi^{-1} at each mixture location (or z_list).
TheoryCov theory_cov(const DistributionSpec& spec, const NoiseSpec& noise, const TheoryOptions& opts = {});

/// Candidate normalizations for the heteroscedastic model-1 row covariance.
struct HeteroCov {
  Matrix sigma_i;    // (1/n) sum_{j != i} sigma_ij^2 Xi
  Matrix whitening;  // sigma_i^{-1/2}
  Matrix conjugated; // Xi^{-1} sigma_i Xi^{-1}
  Matrix resolved;   // Xi^{-1} sigma_i Xi^{-1} / 4, the homoscedastic-consistent form
};

HeteroCov hetero_theory_cov(const DistributionSpec& spec, const SigmaFn& sigma_fn, Index i, Index n);

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

struct Alignment {
  Matrix w;                // d x d orthogonal
  bool degenerate = false; // source^T target rank deficient
};

/// argmin over orthogonal W of ||source W - target||_F (reflections allowed).
Alignment align(const Matrix& source, const Matrix& target);

/// All orthogonal R with R a R^T == b for two symmetric matrices sharing a
/// spectrum, one per eigenbasis sign pattern; sorted by residual.
std::vector<Matrix> orthogonal_conjugations(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Perturbation decomposition
// ---------------------------------------------------------------------------

struct DecompositionReport {
  std::array<Matrix, 6> terms;        // the six n x d terms, in order
  std::array<Vector, 6> term_rows;    // sqrt(n) * row norms of each term
  Vector remainder_rows;              // sqrt(n) * row norms of terms 2..6 summed
  double identity_residual = 0.0;     // ||sum(terms) - (Xhat - U_B S_B^{1/2} W*)||_F
  double xhat_norm = 0.0;             // ||Xhat||_F
  double rank_excess = 0.0;           // ||(I - U_B U_B^T) B||_F / ||B||_F
  bool degenerate = false;
  Matrix w_star;

  double relative_residual() const noexcept {
    return xhat_norm > 0.0 ? identity_residual / xhat_norm : identity_residual;
  }
};

/// Splits Xhat - U_B S_B^{1/2} W* into the leading linear term and five
/// remainders. Exact when B has rank d (as any Gram matrix of d-dim points).
DecompositionReport decompose(const SymmetricMatrix& b, const SymmetricMatrix& b_hat, Index d);

// ---------------------------------------------------------------------------
// Scaling diagnostics
// ---------------------------------------------------------------------------

struct BoundRow {
  Index n = 0;
  double perturbation = 0.0;    // ||B - Bhat|| / sqrt(n log n)
  double eigen_floor = 0.0;     // lambda_d(B) / n
  double procrustes = 0.0;      // ||U_B^T U_Bhat - W1 W2^T|| / (log n / n)
  double juxtaposition = 0.0;   // ||W* S_Bhat - S_B W*||_F / log n
  double juxtaposition_sqrt = 0.0; // ||W* S_Bhat^{1/2} - S_B^{1/2} W*||_F / (log n / sqrt n)
  double sup_row = 0.0;         // max_i ||(Xhat W)_i - c(Z_i - Zbar)|| / sqrt(log n / n)
  double mean_row = 0.0;        // mean_i of the same / sqrt(log n / n)
};

inline constexpr std::array<const char*, 7> kBoundRatioNames = {
    "perturbation", "eigen_floor", "procrustes", "juxtaposition", "juxtaposition_sqrt", "sup_row", "mean_row"};

struct BoundTable {
  std::vector<BoundRow> medians; // one row per n, medians over replicates
  std::array<double, 7> variation{}; // max/min of each median sequence across the grid
  std::array<bool, 7> flagged{};     // variation > 2
  Index failed_replicates = 0;
};

double bound_ratio(const BoundRow& row, size_t which);

struct BoundOptions {
  Index d = 2;
  Index replicates = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

BoundTable bound_checks(const DistributionSpec& spec, const NoiseSpec& noise, const std::vector<Index>& n_grid,
                        const BoundOptions& opts);

struct GrowthCheck {
  double max_row_sum_sq = 0.0;
  double log4n = 0.0;
  bool ok = false;
};

/// max_i sum_j D_ij^2 against 10 log^4 n. Advisory only.
GrowthCheck growth_check(const SymmetricMatrix& d);

} // namespace mdsclt
