#include "mdsclt/pointmodel.hpp"

#include "mdsclt/error.hpp"
#include "mdsclt/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdsclt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// One latent point drawn from stream `s` (non-mixture variants only).
Vector draw_point(const DistributionSpec& spec, const Stream& s) {
  return std::visit(overloaded{
                        [&](const PointMassMixture& m) -> Vector {
                          const double u = s.uniform(0);
                          double acc = 0.0;
                          Index k = 0;
                          for (; k + 1 < m.weights.size(); ++k) {
                            acc += m.weights(k);
                            if (u < acc) break;
                          }
                          return m.locations.row(k).transpose();
                        },
                        [&](const GaussianDistribution& g) -> Vector {
                          Vector z(g.mean.size());
                          for (Index k = 0; k < z.size(); ++k) z(k) = s.normal(static_cast<std::uint64_t>(k));
                          return g.mean + spec.gaussian_factor() * z;
                        },
                        [&](const UniformBox& b) -> Vector {
                          Vector x(b.lo.size());
                          for (Index k = 0; k < x.size(); ++k)
                            x(k) = b.lo(k) + (b.hi(k) - b.lo(k)) * s.uniform(static_cast<std::uint64_t>(k));
                          return x;
                        },
                    },
                    spec.variant());
}

double min_eig(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

} // namespace

DistributionSpec::DistributionSpec(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const PointMassMixture& m) {
                   if (m.locations.rows() < 1 || m.locations.cols() < 1)
                     throw ValidationError("point_mass_mixture: need at least one location");
                   if (m.weights.size() != m.locations.rows())
                     throw ValidationError("point_mass_mixture: one weight per location required");
                   if ((m.weights.array() < 0.0).any() || std::abs(m.weights.sum() - 1.0) > 1e-12)
                     throw ValidationError("point_mass_mixture: weights must lie on the simplex");
                   if (!m.locations.allFinite()) throw ValidationError("point_mass_mixture: non-finite location");
                 },
                 [this](const GaussianDistribution& g) {
                   const Index d = g.mean.size();
                   if (d < 1 || g.covariance.rows() != d || g.covariance.cols() != d)
                     throw ValidationError("gaussian: covariance must be d x d with d = mean size >= 1");
                   if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() >
                       1e-12 * std::max(1.0, g.covariance.cwiseAbs().maxCoeff()))
                     throw ValidationError("gaussian: covariance must be symmetric");
                   Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(g.covariance)};
                   if (llt.info() != Eigen::Success || min_eig(g.covariance) <= 0.0)
                     throw ValidationError("gaussian: covariance must be positive definite");
                   chol_ = llt.matrixL();
                 },
                 [](const UniformBox& b) {
                   if (b.lo.size() < 1 || b.lo.size() != b.hi.size())
                     throw ValidationError("uniform_box: lo and hi must have the same positive length");
                   if (!(b.lo.array() < b.hi.array()).all()) throw ValidationError("uniform_box: need lo < hi");
                 },
             },
             v_);
}

Index DistributionSpec::dim() const noexcept {
  return std::visit(overloaded{
                        [](const PointMassMixture& m) { return m.locations.cols(); },
                        [](const GaussianDistribution& g) { return g.mean.size(); },
                        [](const UniformBox& b) { return b.lo.size(); },
                    },
                    v_);
}

Index DistributionSpec::classes() const noexcept {
  if (const auto* m = mixture()) return m->locations.rows();
  return 1;
}

DistributionSpec three_point_mass() {
  Matrix loc(3, 2);
  loc << 0.0, 0.0, 3.0, 0.0, 0.0, 4.0;
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const Eigen::RowVectorXd mu = w.transpose() * loc;
  loc.rowwise() -= mu;
  return DistributionSpec(PointMassMixture{loc, w});
}

bool PopulationMoments::singular(double tol) const noexcept {
  const double scale = std::max(1.0, xi.cwiseAbs().maxCoeff());
  return min_eigenvalue <= tol * scale;
}

Matrix PopulationMoments::xi_inverse() const {
  if (singular())
    throw NumericalError("population covariance Xi is singular (smallest eigenvalue " +
                         std::to_string(min_eigenvalue) + "); CLT covariances are undefined");
  return xi.inverse();
}

std::vector<Index> class_counts(const Vector& weights, Index n) {
  const Index k = weights.size();
  std::vector<Index> counts(static_cast<size_t>(k));
  std::vector<double> remainder(static_cast<size_t>(k));
  Index total = 0;
  for (Index c = 0; c < k; ++c) {
    const double exact = weights(c) * static_cast<double>(n);
    counts[c] = static_cast<Index>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    total += counts[c];
  }
  std::vector<Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return remainder[a] > remainder[b]; });
  for (Index i = 0; total < n; ++i, ++total) ++counts[order[i % k]];
  return counts;
}

PointCloud sample(const DistributionSpec& spec, Index n, std::uint64_t seed) {
  const Index d = spec.dim();
  if (n < d + 2) throw ValidationError("sample: need n >= d + 2");
  PointCloud cloud;
  cloud.points.resize(n, d);
  if (const auto* m = spec.mixture()) {
    const auto counts = class_counts(m->weights, n);
    std::vector<int> labels;
    labels.reserve(static_cast<size_t>(n));
    Index row = 0;
    for (Index c = 0; c < m->locations.rows(); ++c)
      for (Index r = 0; r < counts[c]; ++r, ++row) {
        cloud.points.row(row) = m->locations.row(c);
        labels.push_back(static_cast<int>(c));
      }
    cloud.labels = std::move(labels);
    return cloud;
  }
  for (Index i = 0; i < n; ++i) cloud.points.row(i) = draw_point(spec, Stream(seed, {static_cast<std::uint64_t>(i)})).transpose();
  return cloud;
}

PopulationMoments moments(const DistributionSpec& spec) {
  PopulationMoments out;
  std::visit(overloaded{
                 [&](const PointMassMixture& m) {
                   out.mu = m.locations.transpose() * m.weights;
                   const Matrix c = m.locations.rowwise() - out.mu.transpose();
                   out.xi = c.transpose() * m.weights.asDiagonal() * c;
                 },
                 [&](const GaussianDistribution& g) {
                   out.mu = g.mean;
                   out.xi = g.covariance;
                 },
                 [&](const UniformBox& b) {
                   out.mu = 0.5 * (b.lo + b.hi);
                   out.xi = ((b.hi - b.lo).array().square() / 12.0).matrix().asDiagonal();
                 },
             },
             spec.variant());
  out.xi = 0.5 * (out.xi + out.xi.transpose()).eval();
  out.exact = true;
  out.min_eigenvalue = min_eig(out.xi);
  return out;
}

SigmaTilde sigma_tilde(const DistributionSpec& spec, const Vector& z, const NoiseSpec& noise, Index mc_draws,
                       std::uint64_t seed) {
  const Index d = spec.dim();
  if (z.size() != d) throw ValidationError("sigma_tilde: z has the wrong dimension");

  std::function<double(double)> weight;
  if (const auto m = noise.moments(); m && noise.model() == NoiseModel::model2) {
    const double s2 = m->sigma2;
    const double c0 = m->xi4 / 4.0 - s2 * s2 / 4.0;
    weight = [s2, g = m->gamma, c0](double r) { return s2 * r * r + g * r + c0; };
  } else if (const auto q = noise.q()) {
    weight = [c = (1.0 - *q) / 4.0](double r) { return c * r * r * r * r; };
  } else {
    throw ValidationError("sigma_tilde: defined for model2 and model3 only (got " + noise.tag() + ")");
  }

  const PopulationMoments mom = moments(spec);
  SigmaTilde out;
  out.value = Matrix::Zero(d, d);

  if (const auto* m = spec.mixture()) {
    for (Index k = 0; k < m->locations.rows(); ++k) {
      const Vector x = m->locations.row(k).transpose();
      const Vector c = x - mom.mu;
      out.value += m->weights(k) * weight((z - x).norm()) * (c * c.transpose());
    }
    out.exact = true;
  } else {
    if (mc_draws < 2) throw ValidationError("sigma_tilde: need at least 2 Monte Carlo draws");
    Matrix sum = Matrix::Zero(d, d);
    Matrix sum_sq = Matrix::Zero(d, d);
    for (Index t = 0; t < mc_draws; ++t) {
      const Vector x = draw_point(spec, Stream(seed, {0x51u, static_cast<std::uint64_t>(t)}));
      const Vector c = x - mom.mu;
      const Matrix term = weight((z - x).norm()) * (c * c.transpose());
      sum += term;
      sum_sq += term.array().square().matrix();
    }
    const double nd = static_cast<double>(mc_draws);
    out.value = sum / nd;
    const Matrix var = (sum_sq / nd - out.value.array().square().matrix()) * (nd / (nd - 1.0));
    out.std_error = std::sqrt(std::max(0.0, var.maxCoeff()) / nd);
    out.exact = false;
  }
  out.value = 0.5 * (out.value + out.value.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(out.value)};
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Vector clipped = es.eigenvalues().cwiseMax(0.0);
    const Matrix projected = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    out.psd_projection = (projected - out.value).norm();
    // Exact mixtures can only go negative through a negative weight (gamma < 0),
    // which is a property of the law, not sampling error: keep those as is.
    if (!out.exact) out.value = 0.5 * (projected + projected.transpose());
  }
  return out;
}

} // namespace mdsclt
