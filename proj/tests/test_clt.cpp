#include "doctest.h"

#include "mdsclt/clt.hpp"
#include "mdsclt/cmds.hpp"
#include "mdsclt/error.hpp"
#include "mdsclt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace mdsclt;

namespace {

Matrix gaussian_matrix(Index r, Index c, std::uint64_t seed) {
  const Stream s(seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c), 77});
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = s.normal(static_cast<std::uint64_t>(i * c + j));
  return m;
}

Matrix rotation(double t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix row_cov(const Matrix& rows) {
  const Matrix c = rows.rowwise() - rows.colwise().mean();
  return c.transpose() * c / static_cast<double>(rows.rows() - 1);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

} // namespace

TEST_CASE("model 1 limiting covariance") {
  const DistributionSpec g(GaussianDistribution{Vector::Zero(2), Matrix::Identity(2, 2)});
  const auto tc = theory_cov(g, NoiseSpec(Model1{GaussianLaw{2.0}}));
  REQUIRE(tc.per_class.size() == 1);
  CHECK((tc.per_class[0].sigma - Matrix::Identity(2, 2)).norm() <= 1e-14);
  CHECK(tc.center_scale == 1.0);
  const auto zero = theory_cov(g, NoiseSpec(Model1{GaussianLaw{0.0}}));
  CHECK(zero.per_class[0].sigma.norm() == 0.0);

  const auto tri = theory_cov(three_point_mass(), NoiseSpec(Model1{UniformLaw{2.0}}));
  CHECK(tri.per_class.size() == 3);
  for (const auto& c : tri.per_class) {
    CHECK((c.sigma - c.sigma.transpose()).norm() == 0.0);
    CHECK((c.sigma - tri.per_class[0].sigma).norm() == 0.0); // z-free
  }
}

TEST_CASE("model 2 and 3 limiting covariances") {
  const auto spec = three_point_mass();
  const auto m2 = theory_cov(spec, NoiseSpec(Model2{UniformLaw{4.0}}));
  REQUIRE(m2.per_class.size() == 3);
  // Xi^-1 Sigma~ Xi^-1 at the first location, numpy oracle
  CHECK((m2.per_class[0].sigma - mat2(23.045267, 2.37037, 2.37037, 13.155556)).norm() <= 1e-5);
  CHECK((m2.per_class[0].z - spec.mixture()->locations.row(0).transpose()).norm() == 0.0);

  const auto m3 = theory_cov(spec, NoiseSpec(Model3{0.49}));
  CHECK(m3.center_scale == doctest::Approx(0.7));
  CHECK((m3.per_class[0].sigma - mat2(3.825, 0.0, 0.0, 4.08)).norm() <= 1e-6);

  TheoryOptions opts;
  opts.q_n = 1.0;
  const auto full = theory_cov(spec, NoiseSpec(Model3{0.49}), opts);
  CHECK(full.center_scale == 1.0);
  CHECK(full.per_class[0].sigma.norm() == 0.0);

  CHECK_THROWS_AS(theory_cov(spec, NoiseSpec(Model2HeteroUniformScaled{})), ValidationError);

  Matrix line(2, 2);
  line << 0, 0, 1, 1;
  const DistributionSpec collinear(PointMassMixture{line, Vector::Constant(2, 0.5)});
  CHECK_THROWS_AS(theory_cov(collinear, NoiseSpec(Model1{GaussianLaw{1.0}})), NumericalError);
}

TEST_CASE("model 3 on a continuous law uses the supplied points") {
  const DistributionSpec g(GaussianDistribution{Vector::Zero(2), Matrix::Identity(2, 2)});
  TheoryOptions opts;
  opts.z_list = {Vector::Zero(2), Vector::Ones(2)};
  opts.mc_draws = 20000;
  const auto tc = theory_cov(g, NoiseSpec(Model3{0.0}), opts);
  REQUIRE(tc.per_class.size() == 2);
  CHECK(tc.per_class[0].sigma(0, 0) == doctest::Approx(6.0).epsilon(0.1));
  CHECK(tc.per_class[1].sigma(0, 0) > tc.per_class[0].sigma(0, 0));
}

TEST_CASE("heteroscedastic normalizations") {
  const auto spec = three_point_mass();
  const Matrix xi = moments(spec).xi;
  const Index n = 200;

  SUBCASE("constant rule matches the homoscedastic limit") {
    const double s = 1.5;
    const auto h = hetero_theory_cov(spec, make_sigma_fn(ConstantSigma{s}), 5, n);
    const double f = static_cast<double>(n - 1) / static_cast<double>(n);
    CHECK((h.sigma_i - f * s * s * xi).norm() <= 1e-12);
    const auto m1 = theory_cov(spec, NoiseSpec(Model1{GaussianLaw{s}}));
    CHECK((h.resolved - m1.per_class[0].sigma).norm() <= 0.01 * m1.per_class[0].sigma.norm());
    CHECK((h.conjugated - 4 * h.resolved).norm() <= 1e-12);
    CHECK((h.whitening * h.sigma_i * h.whitening - Matrix::Identity(2, 2)).norm() <= 1e-10);
  }
  SUBCASE("zero rule") {
    const auto h = hetero_theory_cov(spec, [](Index, Index, Index) { return 0.0; }, 0, n);
    CHECK(h.sigma_i.norm() == 0.0);
    CHECK(h.resolved.norm() == 0.0);
  }
  SUBCASE("parity rule, direct summation") {
    const double c = 2.0;
    const auto fn = make_sigma_fn(ParitySigma{c});
    const Index odd = 7, even = 8, m = 101;
    // odd row: only even partners count, there are 51 of them in 0..100
    CHECK((hetero_theory_cov(spec, fn, odd, m).sigma_i - 51.0 / 101 * c * c * xi).norm() <= 1e-12);
    // even row: every partner counts
    CHECK((hetero_theory_cov(spec, fn, even, m).sigma_i - 100.0 / 101 * c * c * xi).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(hetero_theory_cov(spec, make_sigma_fn(ConstantSigma{1}), n, n), ValidationError);
}

TEST_CASE("alignment") {
  const Matrix x = gaussian_matrix(50, 2, 1);
  SUBCASE("identity") {
    const auto a = align(x, x);
    CHECK((a.w - Matrix::Identity(2, 2)).norm() <= 1e-10);
    CHECK_FALSE(a.degenerate);
  }
  SUBCASE("exact rotation and reflection") {
    Matrix refl = rotation(1.1);
    refl.col(1) *= -1.0;
    for (const Matrix& r : {rotation(2.3), refl}) {
      const auto a = align(x, x * r);
      CHECK((a.w - r).norm() <= 1e-9);
      CHECK((a.w.transpose() * a.w - Matrix::Identity(2, 2)).norm() <= 1e-10);
    }
  }
  SUBCASE("noisy target against a grid search") {
    const Matrix r = rotation(0.4);
    const Matrix target = x * r + 0.05 * gaussian_matrix(50, 2, 2);
    const auto a = align(x, target);
    double best = INFINITY;
    Matrix best_w;
    const int steps = 200000;
    for (int refl = 0; refl < 2; ++refl)
      for (int k = 0; k < steps; ++k) {
        Matrix w = rotation(2 * std::numbers::pi * k / steps);
        if (refl) w.col(1) *= -1.0;
        const double f = (x * w - target).squaredNorm();
        if (f < best) {
          best = f;
          best_w = w;
        }
      }
    CHECK((a.w - best_w).norm() <= 1e-3);
    CHECK((x * a.w - target).squaredNorm() <= best + 1e-12);
  }
  SUBCASE("rank-deficient cross product") {
    Matrix flat = x;
    flat.col(1).setZero();
    CHECK(align(flat, x).degenerate);
  }
  CHECK_THROWS_AS(align(x, gaussian_matrix(49, 2, 1)), ValidationError);
}

TEST_CASE("aligned row covariance follows a rotated reference") {
  const Matrix z = gaussian_matrix(80, 2, 3);
  const Matrix xhat = z * rotation(0.9) + 0.3 * gaussian_matrix(80, 2, 4);
  const Matrix q = rotation(-1.3);
  const Matrix e1 = xhat * align(xhat, z).w - z;
  const Matrix e2 = xhat * align(xhat, z * q).w - z * q;
  CHECK((row_cov(e2) - q.transpose() * row_cov(e1) * q).norm() <= 1e-9);
}

TEST_CASE("orthogonal conjugations") {
  const Matrix a = mat2(3, 1, 1, 2);
  const Matrix r = rotation(0.8);
  const Matrix b = r * a * r.transpose();
  const auto cands = orthogonal_conjugations(a, b);
  REQUIRE(cands.size() == 2);
  bool has_r = false;
  for (const auto& c : cands) {
    CHECK((c * a * c.transpose() - b).norm() <= 1e-10);
    CHECK((c.transpose() * c - Matrix::Identity(2, 2)).norm() <= 1e-10);
    has_r = has_r || (c - r).norm() <= 1e-9 || (c + r).norm() <= 1e-9;
  }
  CHECK(has_r);
}

TEST_CASE("decomposition identity") {
  const Index n = 40, d = 2;
  SUBCASE("no perturbation") {
    const Matrix z = gaussian_matrix(n, d, 5);
    const auto b = double_center(distance_matrix(z).squared());
    const auto rep = decompose(b, b, d);
    for (const auto& t : rep.terms) CHECK(t.norm() <= 1e-8 * rep.xhat_norm);
    CHECK(rep.relative_residual() <= 1e-10);
  }
  SUBCASE("rank-d B against arbitrary symmetric perturbations") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Matrix z = gaussian_matrix(n, d, 100 + s);
      const auto b = SymmetricMatrix::from_upper(z * z.transpose());
      const Matrix e = gaussian_matrix(n, n, 200 + s);
      const auto bh = SymmetricMatrix::from_upper(b.data() + 0.5 * (e + e.transpose()));
      const auto rep = decompose(b, bh, d);
      CHECK(rep.relative_residual() <= 1e-7);
      CHECK(rep.rank_excess <= 1e-12);
      CHECK(rep.term_rows[0].size() == n);
      CHECK((rep.w_star.transpose() * rep.w_star - Matrix::Identity(d, d)).norm() <= 1e-10);
    }
  }
  SUBCASE("preconditions") {
    const auto zero = SymmetricMatrix::zeros(5);
    CHECK_THROWS_AS(decompose(zero, zero, 2), NumericalError);
    CHECK_THROWS_AS(decompose(zero, SymmetricMatrix::zeros(6), 2), ValidationError);
  }
}

TEST_CASE("decomposition remainder shrinks with n") {
  const auto spec = three_point_mass();
  const NoiseSpec noise(Model2{UniformLaw{4.0}});
  std::vector<double> med;
  for (Index n : {100, 1000}) {
    const auto cloud = sample(spec, n, 1);
    const auto dm = distance_matrix(cloud.points);
    const auto b = double_center(dm.squared());
    const auto bh = double_center(perturb(dm, noise, 2).delta_sq);
    const auto rep = decompose(b, bh, 2);
    CHECK(rep.relative_residual() <= 1e-7);
    med.push_back(median(std::vector<double>(rep.remainder_rows.data(), rep.remainder_rows.data() + n)));
  }
  CHECK(med[1] < med[0]);
}

TEST_CASE("bound checks") {
  BoundOptions opts;
  opts.replicates = 3;
  opts.seed = 4;
  SUBCASE("noise free") {
    const auto t = bound_checks(three_point_mass(), NoiseSpec(Model2{UniformLaw{0.0}}), {50, 100, 200}, opts);
    REQUIRE(t.medians.size() == 3);
    for (const auto& row : t.medians) {
      CHECK(row.perturbation == 0.0);
      CHECK(row.eigen_floor > 0.0);
      CHECK(row.sup_row <= 1e-6);
    }
    CHECK(t.variation[1] < 1.2); // eigen floor stable
    CHECK_FALSE(t.flagged[1]);
    CHECK(t.failed_replicates == 0);
    CHECK(t.variation[0] == 1.0);
  }
  SUBCASE("noisy grid is deterministic") {
    const NoiseSpec noise(Model2{UniformLaw{4.0}});
    const auto a = bound_checks(three_point_mass(), noise, {50, 100, 200}, opts);
    opts.threads = 2;
    const auto b = bound_checks(three_point_mass(), noise, {50, 100, 200}, opts);
    for (size_t k = 0; k < 3; ++k)
      for (size_t r = 0; r < kBoundRatioNames.size(); ++r) CHECK(bound_ratio(a.medians[k], r) == bound_ratio(b.medians[k], r));
  }
  CHECK_THROWS_AS(bound_checks(three_point_mass(), NoiseSpec(Model3{0.5}), {100, 50, 200}, opts), ValidationError);
  CHECK_THROWS_AS(bound_checks(three_point_mass(), NoiseSpec(Model3{0.5}), {50, 100}, opts), ValidationError);
}

TEST_CASE("growth check") {
  CHECK_FALSE(growth_check(SymmetricMatrix::zeros(10)).ok);
  // triangle masses: the heaviest row is a middle-class point, 200*9 + 500*25 = 14300 at n = 1000,
  // which is still under 10 log^4 n there; the linear growth overtakes it by n = 5000
  const auto mid = growth_check(distance_matrix(sample(three_point_mass(), 1000, 0).points));
  CHECK(mid.max_row_sum_sq == doctest::Approx(14300.0));
  CHECK(mid.log4n == doctest::Approx(std::pow(std::log(1000.0), 4)));
  CHECK_FALSE(mid.ok);
  const auto big = growth_check(distance_matrix(sample(three_point_mass(), 5000, 0).points));
  CHECK(big.max_row_sum_sq == doctest::Approx(71500.0));
  CHECK(big.ok);
  Matrix tiny(4, 2);
  tiny << 0, 0, 1, 0, 0, 1, 1, 1;
  const auto small = growth_check(distance_matrix(tiny));
  CHECK_FALSE(small.ok);
  CHECK(small.max_row_sum_sq == doctest::Approx(4.0));
  CHECK(embed(distance_matrix(tiny).squared(), 2).config.rows() == 4);
}
