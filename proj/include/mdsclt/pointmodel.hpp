#pragma once

#include "mdsclt/matrixcore.hpp"
#include "mdsclt/noise.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace mdsclt {

struct PointMassMixture {
  Matrix locations; // k x d
  Vector weights;   // k, on the simplex
};
struct GaussianDistribution {
  Vector mean;
  Matrix covariance;
};
struct UniformBox {
  Vector lo;
  Vector hi;
};

class DistributionSpec {
public:
  using Variant = std::variant<PointMassMixture, GaussianDistribution, UniformBox>;

  /// Validates: weights on the simplex (1e-12), covariance SPD, lo < hi.
  DistributionSpec(Variant v);

  const Variant& variant() const noexcept { return v_; }
  Index dim() const noexcept;
  const PointMassMixture* mixture() const noexcept { return std::get_if<PointMassMixture>(&v_); }
  /// Number of classes: mixture components, or 1.
  Index classes() const noexcept;
  /// Lower Cholesky factor of the Gaussian covariance (empty otherwise).
  const Matrix& gaussian_factor() const noexcept { return chol_; }

private:
  Variant v_;
  Matrix chol_;
};

/// The three-point-mass configuration: a right triangle with legs 3 and 4
/// (x1 at the right angle), weights [0.2, 0.3, 0.5], translated so the
/// population mean is the origin.
DistributionSpec three_point_mass();

struct PointCloud {
  Matrix points; // n x d
  std::optional<std::vector<int>> labels;

  Index n() const noexcept { return points.rows(); }
  Index d() const noexcept { return points.cols(); }
};

struct PopulationMoments {
  Vector mu;
  Matrix xi;
  bool exact = true;
  double min_eigenvalue = 0.0; // of xi

  bool singular(double tol = 1e-12) const noexcept;
  /// Throws NumericalError carrying the smallest eigenvalue when singular.
  Matrix xi_inverse() const;
};

/// Class counts round(pi_k n), adjusted by largest remainder to sum to n.
std::vector<Index> class_counts(const Vector& weights, Index n);

/// Deterministic in (spec, n, seed). Mixture samples are grouped by class.
PointCloud sample(const DistributionSpec& spec, Index n, std::uint64_t seed);

PopulationMoments moments(const DistributionSpec& spec);

struct SigmaTilde {
  Matrix value;
  bool exact = true;
  double std_error = 0.0;        // max entry-wise Monte Carlo standard error
  double psd_projection = 0.0;   // Frobenius distance moved onto the PSD cone
};

/// Covariance kernel of the model 2 / model 3 limits at latent position z.
/// Exact for point-mass mixtures, Monte Carlo otherwise.
SigmaTilde sigma_tilde(const DistributionSpec& spec, const Vector& z, const NoiseSpec& noise,
                       Index mc_draws = 200000, std::uint64_t seed = 0);

} // namespace mdsclt
