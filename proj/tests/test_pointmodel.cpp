#include "doctest.h"

#include "mdsclt/error.hpp"
#include "mdsclt/pointmodel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mdsclt;

namespace {

Vector sorted_eigs(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(m)};
  return es.eigenvalues();
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

} // namespace

TEST_CASE("class counts") {
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  CHECK(class_counts(w, 1000) == std::vector<Index>{200, 300, 500});
  const auto c = class_counts(w, 7);
  CHECK(c[0] + c[1] + c[2] == 7);
  Vector thirds = Vector::Constant(3, 1.0 / 3.0);
  const auto t = class_counts(thirds, 100);
  CHECK(t[0] + t[1] + t[2] == 100);
}

TEST_CASE("three point mass sampling") {
  const auto spec = three_point_mass();
  REQUIRE(spec.mixture());
  CHECK(spec.classes() == 3);
  CHECK(spec.dim() == 2);
  const auto& loc = spec.mixture()->locations;
  CHECK((loc.row(0) - loc.row(1)).norm() == doctest::Approx(3.0));
  CHECK((loc.row(0) - loc.row(2)).norm() == doctest::Approx(4.0));
  CHECK((loc.row(1) - loc.row(2)).norm() == doctest::Approx(5.0));

  const auto cloud = sample(spec, 1000, 3);
  REQUIRE(cloud.labels);
  std::vector<Index> count(3, 0);
  int prev = 0;
  bool grouped = true;
  for (Index i = 0; i < cloud.n(); ++i) {
    const int l = (*cloud.labels)[static_cast<std::size_t>(i)];
    grouped = grouped && l >= prev;
    prev = l;
    ++count[static_cast<std::size_t>(l)];
    CHECK((cloud.points.row(i) - loc.row(l)).norm() == 0.0);
  }
  CHECK(grouped);
  CHECK(count == std::vector<Index>{200, 300, 500});
}

TEST_CASE("sampling is deterministic and seed dependent") {
  const DistributionSpec g(GaussianDistribution{Vector::Zero(2), Matrix::Identity(2, 2)});
  const auto a = sample(g, 10, 42), b = sample(g, 10, 42), c = sample(g, 10, 43);
  CHECK((a.points - b.points).norm() == 0.0);
  CHECK((a.points - c.points).norm() > 0.0);
  CHECK_FALSE(a.labels);
  CHECK(a.points.allFinite());
}

TEST_CASE("degenerate single mass") {
  Matrix loc(1, 2);
  loc << 1.5, -2.0;
  const DistributionSpec one(PointMassMixture{loc, Vector::Ones(1)});
  const auto cloud = sample(one, 12, 0);
  for (Index i = 0; i < 12; ++i) CHECK((cloud.points.row(i) - loc.row(0)).norm() == 0.0);
  CHECK(moments(one).singular());
  CHECK_THROWS_AS(moments(one).xi_inverse(), NumericalError);
}

TEST_CASE("uniform box sampling stays in the box") {
  Vector lo(2), hi(2);
  lo << -1, 2;
  hi << 1, 5;
  const auto cloud = sample(DistributionSpec(UniformBox{lo, hi}), 500, 1);
  for (Index i = 0; i < 500; ++i) {
    CHECK(cloud.points(i, 0) >= -1.0);
    CHECK(cloud.points(i, 0) < 1.0);
    CHECK(cloud.points(i, 1) >= 2.0);
    CHECK(cloud.points(i, 1) < 5.0);
  }
  const auto m = moments(DistributionSpec(UniformBox{lo, hi}));
  CHECK(m.mu(1) == doctest::Approx(3.5));
  CHECK(m.xi(0, 0) == doctest::Approx(4.0 / 12));
  CHECK(m.xi(1, 1) == doctest::Approx(9.0 / 12));
  CHECK(m.xi(0, 1) == 0.0);
}

TEST_CASE("validation") {
  Matrix loc(2, 1);
  loc << -1, 1;
  Vector w(2);
  w << 0.5, 0.6;
  CHECK_THROWS_AS(DistributionSpec(PointMassMixture{loc, w}), ValidationError);
  w << 1.2, -0.2;
  CHECK_THROWS_AS(DistributionSpec(PointMassMixture{loc, w}), ValidationError);
  CHECK_THROWS_AS(DistributionSpec(GaussianDistribution{Vector::Zero(2), mat2(1, 2, 2, 1)}), ValidationError);
  CHECK_THROWS_AS(DistributionSpec(GaussianDistribution{Vector::Zero(2), mat2(1, 0.5, 0, 1)}), ValidationError);
  Vector lo = Vector::Ones(1), hi = Vector::Ones(1);
  CHECK_THROWS_AS(DistributionSpec(UniformBox{lo, hi}), ValidationError);
  CHECK_THROWS_AS(sample(three_point_mass(), 3, 0), ValidationError); // n < d + 2
}

TEST_CASE("moments") {
  SUBCASE("gaussian") {
    Vector m(2);
    m << 1, -2;
    const Matrix c = mat2(2, 0.5, 0.5, 1);
    const auto mo = moments(DistributionSpec(GaussianDistribution{m, c}));
    CHECK((mo.mu - m).norm() == 0.0);
    CHECK((mo.xi - c).norm() == 0.0);
    CHECK(mo.exact);
  }
  SUBCASE("symmetric pair") {
    Matrix loc(2, 1);
    loc << -1, 1;
    const auto mo = moments(DistributionSpec(PointMassMixture{loc, Vector::Constant(2, 0.5)}));
    CHECK(mo.mu(0) == doctest::Approx(0.0));
    CHECK(mo.xi(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("triangle against a sampled oracle") {
    // sample covariance of 1e6 draws from the mixture (numpy, seed 0)
    const Matrix oracle = mat2(1.890279036918037, -1.7997652205092254, -1.7997652205092254, 4.000003397827442);
    const auto mo = moments(three_point_mass());
    CHECK(mo.mu.norm() < 1e-12);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) CHECK(std::abs(mo.xi(i, j) - oracle(i, j)) <= 0.005 * std::abs(oracle(i, j)));
    CHECK(mo.xi(0, 0) == doctest::Approx(1.89));
    CHECK(mo.xi(0, 1) == doctest::Approx(-1.8));
    CHECK(mo.xi(1, 1) == doctest::Approx(4.0));
  }
  SUBCASE("collinear masses are singular") {
    Matrix loc(3, 2);
    loc << 0, 0, 1, 1, 2, 2;
    const auto mo = moments(DistributionSpec(PointMassMixture{loc, Vector::Constant(3, 1.0 / 3)}));
    CHECK(mo.singular());
    CHECK_THROWS_AS(mo.xi_inverse(), NumericalError);
  }
}

TEST_CASE("population covariance matches a large sample") {
  const DistributionSpec g(GaussianDistribution{Vector::Zero(2), mat2(2, 0.7, 0.7, 1)});
  const Index n = 100000;
  const auto cloud = sample(g, n, 5);
  const Matrix c = cloud.points.rowwise() - cloud.points.colwise().mean();
  const Matrix cov = c.transpose() * c / static_cast<double>(n - 1);
  const auto mo = moments(g);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) {
      // Var of the sample covariance entry is (C_ii C_jj + C_ij^2) / n for a Gaussian
      const double se = std::sqrt((mo.xi(i, i) * mo.xi(j, j) + mo.xi(i, j) * mo.xi(i, j)) / static_cast<double>(n));
      CHECK(std::abs(cov(i, j) - mo.xi(i, j)) <= 5 * se);
    }
}

TEST_CASE("sigma tilde") {
  const auto spec = three_point_mass();
  const Vector z = spec.mixture()->locations.row(0).transpose();

  SUBCASE("full observation gives zero") {
    const auto s = sigma_tilde(spec, z, NoiseSpec(Model3{1.0}));
    CHECK(s.value.norm() == 0.0);
  }
  SUBCASE("zero noise gives zero") {
    const auto s = sigma_tilde(spec, z, NoiseSpec(Model2{UniformLaw{0.0}}));
    CHECK(s.value.norm() == 0.0);
  }
  SUBCASE("model 1 is rejected") {
    CHECK_THROWS_AS(sigma_tilde(spec, z, NoiseSpec(Model1{GaussianLaw{1.0}})), ValidationError);
  }
  SUBCASE("uniform(-4,4) sandwich at each location") {
    // Xi^-1 Sigma~(z) Xi^-1 per class location, computed with numpy
    const Matrix oracle[3] = {mat2(23.045267, 2.37037, 2.37037, 13.155556),
                              mat2(31.934156, 22.37037, 22.37037, 34.155556),
                              mat2(102.057613, 37.925926, 37.925926, 29.155556)};
    const auto mo = moments(spec);
    const Matrix xinv = mo.xi_inverse();
    const NoiseSpec noise(Model2{UniformLaw{4.0}});
    for (Index k = 0; k < 3; ++k) {
      const Vector zk = spec.mixture()->locations.row(k).transpose();
      const auto s = sigma_tilde(spec, zk, noise, 10, 99);
      CHECK(s.exact);
      CHECK((s.value - s.value.transpose()).norm() == 0.0);
      const Matrix sand = xinv * s.value * xinv;
      CHECK((sand - oracle[k]).norm() <= 1e-5 * oracle[k].norm());
      // exact path ignores draws and seed
      CHECK((sigma_tilde(spec, zk, noise, 5000, 1).value - s.value).norm() == 0.0);
    }
    // published value for the first class, up to rotation: compare spectra
    const Vector got = sorted_eigs(xinv * sigma_tilde(spec, z, noise).value * xinv);
    const Vector pub = sorted_eigs(mat2(13.56, -3.06, -3.06, 22.65));
    CHECK(got(0) == doctest::Approx(pub(0)).epsilon(0.01));
    CHECK(got(1) == doctest::Approx(pub(1)).epsilon(0.01));
  }
  SUBCASE("model 3 sandwich") {
    const auto mo = moments(spec);
    const Matrix xinv = mo.xi_inverse();
    const auto s = sigma_tilde(spec, z, NoiseSpec(Model3{0.49}));
    const Matrix sand = xinv * s.value * xinv;
    CHECK((sand - mat2(3.825, 0.0, 0.0, 4.08)).norm() <= 1e-6);
  }
  SUBCASE("Monte Carlo path for a continuous law") {
    const DistributionSpec g(GaussianDistribution{Vector::Zero(2), Matrix::Identity(2, 2)});
    const Vector z0 = Vector::Zero(2);
    const auto s = sigma_tilde(g, z0, NoiseSpec(Model3{0.0}), 200000, 3);
    CHECK_FALSE(s.exact);
    CHECK(s.std_error > 0.0);
    // E[|Z|^4 Z Z^T] / 4 for Z ~ N(0, I2): E[r^6]/2 / 4 = 48/8 = 6 on the diagonal
    CHECK(s.value(0, 0) == doctest::Approx(6.0).epsilon(0.05));
    CHECK(s.value(1, 1) == doctest::Approx(6.0).epsilon(0.05));
    CHECK(std::abs(s.value(0, 1)) <= 5 * s.std_error + 0.1);
    const auto again = sigma_tilde(g, z0, NoiseSpec(Model3{0.0}), 200000, 3);
    CHECK((again.value - s.value).norm() == 0.0);
  }
}
