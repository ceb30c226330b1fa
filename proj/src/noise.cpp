#include "mdsclt/noise.hpp"

#include "mdsclt/error.hpp"

#include <cmath>

namespace mdsclt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Stream entry_stream(std::uint64_t seed, Index i, Index j) {
  return Stream(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
}

// Fills the strict upper triangle of E with f(i, j) and mirrors it.
template <class F>
SymmetricMatrix fill_noise(Index n, F&& f) {
  Matrix e = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) e(i, j) = f(i, j);
  return SymmetricMatrix::from_upper(e);
}

void require_input(const SymmetricMatrix& d, const char* what) {
  d.require_hollow(what);
  if ((d.data().array() < 0.0).any()) throw ValidationError(std::string(what) + ": distances must be non-negative");
}

} // namespace

NoiseMoments law_moments(const ScalarLaw& law) {
  return std::visit(overloaded{
                        [](const UniformLaw& u) {
                          const double a2 = u.a * u.a;
                          return NoiseMoments{a2 / 3.0, 0.0, a2 * a2 / 5.0};
                        },
                        [](const GaussianLaw& g) {
                          const double s2 = g.sigma * g.sigma;
                          return NoiseMoments{s2, 0.0, 3.0 * s2 * s2};
                        },
                        [](const TwoPointLaw& t) {
                          const double ab = t.lo * t.hi;
                          return NoiseMoments{-ab, -ab * (t.lo + t.hi),
                                              -ab * (t.lo * t.lo + ab + t.hi * t.hi)};
                        },
                    },
                    law);
}

void validate_law(const ScalarLaw& law) {
  std::visit(overloaded{
                 [](const UniformLaw& u) {
                   if (!(u.a >= 0.0) || !std::isfinite(u.a))
                     throw ValidationError("uniform noise law: half-width a must be finite and >= 0");
                 },
                 [](const GaussianLaw& g) {
                   if (!(g.sigma >= 0.0) || !std::isfinite(g.sigma))
                     throw ValidationError("gaussian noise law: sigma must be finite and >= 0");
                 },
                 [](const TwoPointLaw& t) {
                   if (!(t.lo < 0.0 && t.hi > 0.0) || !std::isfinite(t.lo) || !std::isfinite(t.hi))
                     throw ValidationError("two-point noise law: need lo < 0 < hi");
                 },
             },
             law);
}

ScalarLaw law_with_sd(const ScalarLaw& law, double sd) {
  return std::visit(overloaded{
                        [sd](const UniformLaw&) -> ScalarLaw { return UniformLaw{sd * std::sqrt(3.0)}; },
                        [sd](const GaussianLaw&) -> ScalarLaw { return GaussianLaw{sd}; },
                        [sd](const TwoPointLaw& t) -> ScalarLaw {
                          const double scale = sd / std::sqrt(-t.lo * t.hi);
                          return TwoPointLaw{t.lo * scale, t.hi * scale};
                        },
                    },
                    law);
}

double draw(const ScalarLaw& law, const Stream& stream) {
  return std::visit(overloaded{
                        [&](const UniformLaw& u) { return u.a * (2.0 * stream.uniform(0) - 1.0); },
                        [&](const GaussianLaw& g) { return g.sigma * stream.normal(0); },
                        [&](const TwoPointLaw& t) {
                          if (t.lo == 0.0 && t.hi == 0.0) return 0.0;
                          const double p_hi = -t.lo / (t.hi - t.lo);
                          return stream.uniform(0) < p_hi ? t.hi : t.lo;
                        },
                    },
                    law);
}

SigmaFn make_sigma_fn(const SigmaRule& rule) {
  return std::visit(overloaded{
                        [](const ConstantSigma& c) -> SigmaFn {
                          return [s = c.sigma](Index, Index, Index) { return s; };
                        },
                        [](const GapLinearSigma& g) -> SigmaFn {
                          return [g](Index i, Index j, Index n) {
                            const auto gap = static_cast<double>(i > j ? i - j : j - i);
                            return g.base + g.slope * gap / static_cast<double>(n);
                          };
                        },
                        [](const ParitySigma& p) -> SigmaFn {
                          return [c = p.c](Index i, Index j, Index) {
                            return (i % 2 == 0 || j % 2 == 0) ? c : 0.0;
                          };
                        },
                    },
                    rule);
}

NoiseSpec::NoiseSpec(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const Model1& m) { validate_law(m.law); },
                 [](const Model2& m) { validate_law(m.law); },
                 [](const Model3& m) {
                   if (!(m.q >= 0.0 && m.q <= 1.0)) throw ValidationError("model3: q must lie in [0, 1]");
                 },
                 [](const Model1Hetero& m) { validate_law(m.law); },
                 [](const Model2HeteroUniformScaled&) {},
             },
             v_);
}

NoiseModel NoiseSpec::model() const noexcept {
  return static_cast<NoiseModel>(v_.index());
}

std::string NoiseSpec::tag() const {
  switch (model()) {
  case NoiseModel::model1: return "model1";
  case NoiseModel::model2: return "model2";
  case NoiseModel::model3: return "model3";
  case NoiseModel::model1_hetero: return "model1_hetero";
  case NoiseModel::model2_hetero_uniform_scaled: return "model2_hetero_uniform_scaled";
  }
  return "unknown";
}

std::optional<NoiseMoments> NoiseSpec::moments() const {
  if (auto* m = std::get_if<Model1>(&v_)) return law_moments(m->law);
  if (auto* m = std::get_if<Model2>(&v_)) return law_moments(m->law);
  return std::nullopt;
}

std::optional<double> NoiseSpec::q() const {
  if (auto* m = std::get_if<Model3>(&v_)) return m->q;
  return std::nullopt;
}

void require_symmetric(const SigmaFn& sigma_fn, Index n) {
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (sigma_fn(i, j, n) != sigma_fn(j, i, n))
        throw ValidationError("sigma_fn is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
}

SymmetricMatrix hetero_uniform_scaled(const SymmetricMatrix& d, std::uint64_t seed) {
  require_input(d, "hetero_uniform_scaled");
  const Matrix& dd = d.data();
  Matrix out = Matrix::Zero(d.n(), d.n());
  for (Index i = 0; i < d.n(); ++i)
    for (Index j = i + 1; j < d.n(); ++j) {
      const double e = dd(i, j) * (2.0 * entry_stream(seed, i, j).uniform(0) - 1.0);
      out(i, j) = dd(i, j) + e;
    }
  return SymmetricMatrix::from_upper(out);
}

SymmetricMatrix hetero_model1(const SymmetricMatrix& d, const SigmaFn& sigma_fn, std::uint64_t seed,
                              const ScalarLaw& law) {
  require_input(d, "hetero_model1");
  validate_law(law);
  const Index n = d.n();
  require_symmetric(sigma_fn, n);
  const SymmetricMatrix e = fill_noise(n, [&](Index i, Index j) {
    const double s = sigma_fn(i, j, n);
    if (!(s >= 0.0)) throw ValidationError("sigma_fn returned a negative standard deviation");
    return draw(law_with_sd(law, s), entry_stream(seed, i, j));
  });
  return SymmetricMatrix::from_upper(d.squared().data() + e.data());
}

Perturbation perturb(const SymmetricMatrix& d, const NoiseSpec& spec, std::uint64_t seed) {
  require_input(d, "perturb");
  const Index n = d.n();
  const Matrix& dd = d.data();

  return std::visit(
      overloaded{
          [&](const Model1& m) {
            SymmetricMatrix e = fill_noise(n, [&](Index i, Index j) { return draw(m.law, entry_stream(seed, i, j)); });
            SymmetricMatrix dsq = SymmetricMatrix::from_upper(d.squared().data() + e.data());
            return Perturbation{std::move(dsq), std::nullopt, std::move(e)};
          },
          [&](const Model2& m) {
            SymmetricMatrix e = fill_noise(n, [&](Index i, Index j) { return draw(m.law, entry_stream(seed, i, j)); });
            SymmetricMatrix delta = SymmetricMatrix::from_upper(dd + e.data());
            SymmetricMatrix dsq = delta.squared();
            return Perturbation{std::move(dsq), std::move(delta), std::move(e)};
          },
          [&](const Model3& m) {
            SymmetricMatrix e = fill_noise(n, [&](Index i, Index j) {
              const bool observed = entry_stream(seed, i, j).uniform(0) < m.q;
              return observed ? 0.0 : -dd(i, j);
            });
            SymmetricMatrix delta = SymmetricMatrix::from_upper(dd + e.data());
            SymmetricMatrix dsq = delta.squared();
            return Perturbation{std::move(dsq), std::move(delta), std::move(e)};
          },
          [&](const Model1Hetero& m) {
            SymmetricMatrix dsq = hetero_model1(d, make_sigma_fn(m.sigma), seed, m.law);
            SymmetricMatrix e = SymmetricMatrix::from_upper(dsq.data() - d.squared().data());
            return Perturbation{std::move(dsq), std::nullopt, std::move(e)};
          },
          [&](const Model2HeteroUniformScaled&) {
            SymmetricMatrix delta = hetero_uniform_scaled(d, seed);
            SymmetricMatrix e = SymmetricMatrix::from_upper(delta.data() - dd);
            SymmetricMatrix dsq = delta.squared();
            return Perturbation{std::move(dsq), std::move(delta), std::move(e)};
          },
      },
      spec.variant());
}

} // namespace mdsclt
