#include "doctest.h"

#include "mdsclt/error.hpp"
#include "mdsclt/noise.hpp"
#include "mdsclt/pointmodel.hpp"

#include <cmath>
#include <vector>

using namespace mdsclt;

namespace {

SymmetricMatrix triangle_distances(Index n, std::uint64_t seed = 1) {
  return distance_matrix(sample(three_point_mass(), n, seed).points);
}

std::vector<double> upper(const SymmetricMatrix& m) {
  std::vector<double> out;
  for (Index j = 1; j < m.n(); ++j)
    for (Index i = 0; i < j; ++i) out.push_back(m(i, j));
  return out;
}

bool hollow_symmetric(const SymmetricMatrix& m) {
  return m.data().diagonal().cwiseAbs().maxCoeff() == 0.0 && (m.data() - m.data().transpose()).norm() == 0.0;
}

} // namespace

TEST_CASE("law moments in closed form") {
  const auto u = law_moments(UniformLaw{4.0});
  CHECK(u.sigma2 == doctest::Approx(16.0 / 3));
  CHECK(u.gamma == 0.0);
  CHECK(u.xi4 == doctest::Approx(256.0 / 5));
  const auto g = law_moments(GaussianLaw{2.0});
  CHECK(g.sigma2 == doctest::Approx(4.0));
  CHECK(g.xi4 == doctest::Approx(48.0));
  const auto t = law_moments(TwoPointLaw{-1.0, 3.0});
  // P(hi) = 1/4: E^2 = 3, E^3 = 6, E^4 = 21
  CHECK(t.sigma2 == doctest::Approx(3.0));
  CHECK(t.gamma == doctest::Approx(6.0));
  CHECK(t.xi4 == doctest::Approx(21.0));

  CHECK_THROWS_AS(validate_law(UniformLaw{-1.0}), ValidationError);
  CHECK_THROWS_AS(validate_law(TwoPointLaw{1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(NoiseSpec(Model3{1.5}), ValidationError);

  const auto r = law_moments(law_with_sd(UniformLaw{4.0}, 2.0));
  CHECK(r.sigma2 == doctest::Approx(4.0));
  CHECK(std::get<UniformLaw>(law_with_sd(UniformLaw{1.0}, 1.0)).a == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("model 3 edge cases") {
  const auto d = triangle_distances(30);
  const auto full = perturb(d, NoiseSpec(Model3{1.0}), 4);
  REQUIRE(full.delta);
  CHECK((full.delta->data() - d.data()).norm() == 0.0);
  CHECK(full.noise.data().norm() == 0.0);
  const auto none = perturb(d, NoiseSpec(Model3{0.0}), 4);
  CHECK(none.delta->data().norm() == 0.0);
  CHECK(none.delta_sq.data().norm() == 0.0);
}

TEST_CASE("model 3 observed fraction") {
  const auto d = triangle_distances(200);
  const double q = 0.7;
  const auto p = perturb(d, NoiseSpec(Model3{q}), 8);
  const auto dv = upper(d), ov = upper(*p.delta);
  double sd = 0, so = 0, sd2 = 0;
  for (std::size_t k = 0; k < dv.size(); ++k) {
    sd += dv[k];
    so += ov[k];
    sd2 += dv[k] * dv[k];
  }
  const double m = static_cast<double>(dv.size());
  // Var(sum) = q(1-q) sum D^2
  const double se = std::sqrt(q * (1 - q) * sd2) / m;
  CHECK(std::abs(so / m - q * sd / m) <= 3 * se);
}

TEST_CASE("perturbations are hollow, symmetric and reproducible") {
  const auto d = triangle_distances(50);
  const std::vector<NoiseSpec> specs{NoiseSpec(Model1{GaussianLaw{1.0}}), NoiseSpec(Model2{UniformLaw{4.0}}),
                                     NoiseSpec(Model3{0.5}), NoiseSpec(Model1Hetero{GaussianLaw{1.0}, GapLinearSigma{1, 1}}),
                                     NoiseSpec(Model2HeteroUniformScaled{})};
  for (const auto& s : specs) {
    CAPTURE(s.tag());
    const auto a = perturb(d, s, 17), b = perturb(d, s, 17), c = perturb(d, s, 18);
    CHECK(hollow_symmetric(a.noise));
    CHECK(hollow_symmetric(a.delta_sq));
    CHECK((a.delta_sq.data() - b.delta_sq.data()).norm() == 0.0);
    CHECK((a.delta_sq.data() - c.delta_sq.data()).norm() > 0.0);
  }
  const auto m1 = perturb(d, specs[0], 1);
  CHECK_FALSE(m1.delta);
  CHECK((m1.delta_sq.data() - d.squared().data() - m1.noise.data()).norm() <= 1e-12 * d.squared().data().norm());
  const auto m2 = perturb(d, specs[1], 1);
  REQUIRE(m2.delta);
  CHECK((m2.delta->data() - d.data() - m2.noise.data()).norm() <= 1e-12 * d.data().norm());
  CHECK((m2.delta_sq.data() - m2.delta->data().cwiseAbs2()).norm() == 0.0);
  // negative dissimilarities pass through
  CHECK(m2.delta->data().minCoeff() < 0.0);

  Matrix nh = Matrix::Ones(3, 3);
  CHECK_THROWS_AS(perturb(SymmetricMatrix::from_upper(nh), specs[1], 0), ValidationError);
}

TEST_CASE("entry streams are independent of matrix size") {
  // entry (i, j) only depends on (seed, i, j), so a leading block regenerates identically
  const auto big = triangle_distances(40, 2);
  Matrix top = big.data().topLeftCorner(20, 20);
  const auto small = SymmetricMatrix::from_upper(top);
  const NoiseSpec s(Model2{UniformLaw{4.0}});
  const auto a = perturb(big, s, 5), b = perturb(small, s, 5);
  CHECK((a.noise.data().topLeftCorner(20, 20) - b.noise.data()).norm() == 0.0);
}

TEST_CASE("sample moments of the noise") {
  const Index n = 400;
  const auto d = triangle_distances(n);
  struct Case {
    NoiseSpec spec;
    double m2, m3, m4, m6, m8;
  };
  const double a = 4.0;
  const std::vector<Case> cases{
      {NoiseSpec(Model2{UniformLaw{a}}), a * a / 3, 0.0, std::pow(a, 4) / 5, std::pow(a, 6) / 7, std::pow(a, 8) / 9},
      {NoiseSpec(Model1{GaussianLaw{1.0}}), 1.0, 0.0, 3.0, 15.0, 105.0},
      {NoiseSpec(Model2{TwoPointLaw{-1.0, 3.0}}), 3.0, 6.0, 21.0, 183.0, 1641.0}};
  for (const auto& c : cases) {
    CAPTURE(c.spec.tag());
    const auto e = upper(perturb(d, c.spec, 23).noise);
    const double m = static_cast<double>(e.size());
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (double x : e) {
      s1 += x;
      s2 += x * x;
      s3 += x * x * x;
      s4 += x * x * x * x;
    }
    CHECK(std::abs(s1 / m) <= 5 * std::sqrt(c.m2 / m));
    CHECK(std::abs(s2 / m - c.m2) <= 5 * std::sqrt((c.m4 - c.m2 * c.m2) / m));
    CHECK(std::abs(s3 / m - c.m3) <= 5 * std::sqrt((c.m6 - c.m3 * c.m3) / m));
    CHECK(std::abs(s4 / m - c.m4) <= 5 * std::sqrt((c.m8 - c.m4 * c.m4) / m));

    // lag-1 autocorrelation along the flattened upper triangle
    double num = 0, den = 0;
    const double mean = s1 / m;
    for (std::size_t k = 0; k + 1 < e.size(); ++k) num += (e[k] - mean) * (e[k + 1] - mean);
    for (double x : e) den += (x - mean) * (x - mean);
    CHECK(std::abs(num / den) < 4 / std::sqrt(m));
  }
}

TEST_CASE("heteroscedastic uniform scaled") {
  CHECK(hetero_uniform_scaled(SymmetricMatrix::zeros(5), 1).data().norm() == 0.0);
  const Index n = 500;
  const auto d = triangle_distances(n);
  const auto delta = hetero_uniform_scaled(d, 9);
  bool in_support = true;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      in_support = in_support && delta(i, j) >= 0.0 && delta(i, j) <= 2 * d(i, j);
  CHECK(in_support);
  // pool the pairs by distance level: E~^2 / D^2 should average to 1/3
  double ratio = 0;
  Index count = 0;
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i)
      if (d(i, j) > 0) {
        const double e = delta(i, j) - d(i, j);
        ratio += e * e / (d(i, j) * d(i, j));
        ++count;
      }
  CHECK(ratio / static_cast<double>(count) == doctest::Approx(1.0 / 3).epsilon(0.10));
}

TEST_CASE("heteroscedastic model 1") {
  const auto d = triangle_distances(40);
  SUBCASE("zero sigma") {
    const auto z = hetero_model1(d, [](Index, Index, Index) { return 0.0; }, 3);
    CHECK((z.data() - d.squared().data()).norm() == 0.0);
  }
  SUBCASE("constant sigma reduces to model 1") {
    const auto h = hetero_model1(d, make_sigma_fn(ConstantSigma{1.5}), 3, GaussianLaw{1.0});
    const auto m1 = perturb(d, NoiseSpec(Model1{GaussianLaw{1.5}}), 3);
    CHECK((h.data() - m1.delta_sq.data()).norm() == 0.0);
  }
  SUBCASE("asymmetric rule is rejected") {
    const SigmaFn bad = [](Index i, Index j, Index) { return i < j ? 1.0 : 2.0; };
    CHECK_THROWS_AS(require_symmetric(bad, 4), ValidationError);
    CHECK_THROWS_AS(hetero_model1(d, bad, 0), ValidationError);
  }
  SUBCASE("gap-linear variance of a single entry") {
    const auto fn = make_sigma_fn(GapLinearSigma{1.0, 1.0});
    const Index n = 40, i = 3, j = 33;
    const double want = std::pow(1.0 + 30.0 / 40.0, 2);
    CHECK(fn(i, j, n) == doctest::Approx(1.75));
    double s = 0, s2 = 0;
    const int reps = 10000;
    const double base = d.squared()(i, j);
    for (int r = 0; r < reps; ++r) {
      const double e = hetero_model1(d, fn, static_cast<std::uint64_t>(r))(i, j) - base;
      s += e;
      s2 += e * e;
    }
    const double var = (s2 - s * s / reps) / (reps - 1);
    CHECK(var == doctest::Approx(want).epsilon(0.15));
  }
  SUBCASE("parity rule") {
    const auto fn = make_sigma_fn(ParitySigma{2.0});
    CHECK(fn(0, 3, 10) == 2.0);
    CHECK(fn(1, 3, 10) == 0.0);
  }
}
