#pragma once

#include "mdsclt/matrixcore.hpp"
#include "mdsclt/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace mdsclt {

/// Zero-mean scalar noise laws with closed-form moments.
struct UniformLaw {
  double a = 0.0; // support (-a, a)
};
struct GaussianLaw {
  double sigma = 0.0;
};
/// Mean-zero two-point law on {lo, hi}, lo < 0 < hi.
struct TwoPointLaw {
  double lo = -1.0;
  double hi = 1.0;
};

using ScalarLaw = std::variant<UniformLaw, GaussianLaw, TwoPointLaw>;

struct NoiseMoments {
  double sigma2 = 0.0; // E[E^2]
  double gamma = 0.0;  // E[E^3]
  double xi4 = 0.0;    // E[E^4]
};

NoiseMoments law_moments(const ScalarLaw& law);
void validate_law(const ScalarLaw& law);

/// Same law family rescaled to standard deviation `sd`.
ScalarLaw law_with_sd(const ScalarLaw& law, double sd);

/// Draw for the counter-based stream of one matrix entry.
double draw(const ScalarLaw& law, const Stream& stream);

/// Per-pair standard deviation rules for the heteroscedastic model 1.
struct ConstantSigma {
  double sigma = 1.0;
};
/// sigma_ij = base + slope * |i - j| / n
struct GapLinearSigma {
  double base = 1.0;
  double slope = 1.0;
};
/// sigma_ij = c when i or j is even, 0 otherwise
struct ParitySigma {
  double c = 1.0;
};
using SigmaRule = std::variant<ConstantSigma, GapLinearSigma, ParitySigma>;

/// Callable form used by the noise generators: (i, j, n) -> sigma_ij.
using SigmaFn = std::function<double(Index, Index, Index)>;
SigmaFn make_sigma_fn(const SigmaRule& rule);

struct Model1 {
  ScalarLaw law;
};
struct Model2 {
  ScalarLaw law;
};
struct Model3 {
  double q = 1.0;
};
struct Model1Hetero {
  ScalarLaw law; // shape of the per-entry law; rescaled to sigma_ij
  SigmaRule sigma;
};
struct Model2HeteroUniformScaled {};

enum class NoiseModel { model1, model2, model3, model1_hetero, model2_hetero_uniform_scaled };

class NoiseSpec {
public:
  using Variant = std::variant<Model1, Model2, Model3, Model1Hetero, Model2HeteroUniformScaled>;

  NoiseSpec(Variant v);

  const Variant& variant() const noexcept { return v_; }
  NoiseModel model() const noexcept;
  std::string tag() const;

  /// Moments of E where they are constant across entries (models 1 and 2).
  std::optional<NoiseMoments> moments() const;
  /// Observation probability for model 3.
  std::optional<double> q() const;

private:
  Variant v_;
};

struct Perturbation {
  SymmetricMatrix delta_sq;
  std::optional<SymmetricMatrix> delta; // absent for model 1 variants
  SymmetricMatrix noise;                // E
};

/// Noisy dissimilarities for any NoiseSpec. Entry (i, j), i < j, draws only
/// from the stream keyed by (seed, i, j).
Perturbation perturb(const SymmetricMatrix& d, const NoiseSpec& spec, std::uint64_t seed);

/// Delta = D + E~ with E~_ij ~ Uniform(-D_ij, D_ij).
SymmetricMatrix hetero_uniform_scaled(const SymmetricMatrix& d, std::uint64_t seed);

/// Delta^2 = D^2 + E with Var(E_ij) = sigma_fn(i, j)^2 and E_ij drawn from
/// `law` rescaled per entry.
SymmetricMatrix hetero_model1(const SymmetricMatrix& d, const SigmaFn& sigma_fn, std::uint64_t seed,
                              const ScalarLaw& law = GaussianLaw{1.0});

/// Throws ValidationError unless sigma_fn(i, j, n) == sigma_fn(j, i, n) for all pairs.
void require_symmetric(const SigmaFn& sigma_fn, Index n);

} // namespace mdsclt
