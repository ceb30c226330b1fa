#include "mdsclt/clt.hpp"

#include "mdsclt/error.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdsclt {

namespace {

std::vector<Vector> evaluation_points(const DistributionSpec& spec, const PopulationMoments& mom,
                                      const TheoryOptions& opts) {
  std::vector<Vector> zs;
  if (const auto* m = spec.mixture()) {
    for (Index k = 0; k < m->locations.rows(); ++k) zs.emplace_back(m->locations.row(k).transpose());
  } else if (!opts.z_list.empty()) {
    zs = opts.z_list;
  } else {
    zs.push_back(mom.mu);
  }
  for (const auto& z : zs)
    if (z.size() != spec.dim()) throw ValidationError("theory_cov: evaluation point has the wrong dimension");
  return zs;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

Matrix diag_pow(const Vector& values, double p) {
  return values.array().pow(p).matrix().asDiagonal();
}

} // namespace

TheoryCov theory_cov(const DistributionSpec& spec, const NoiseSpec& noise, const TheoryOptions& opts) {
  const PopulationMoments mom = moments(spec);
  const Matrix xi_inv = mom.xi_inverse();
  const auto zs = evaluation_points(spec, mom, opts);

  TheoryCov out;
  out.model = noise.model();
  switch (noise.model()) {
  case NoiseModel::model1: {
    const Matrix sigma = (noise.moments()->sigma2 / 4.0) * xi_inv;
    for (const auto& z : zs) out.per_class.push_back({z, 0.5 * (sigma + sigma.transpose())});
    out.center_scale = 1.0;
    break;
  }
  case NoiseModel::model2:
  case NoiseModel::model3: {
    NoiseSpec effective = noise;
    if (noise.model() == NoiseModel::model3 && opts.q_n) effective = NoiseSpec(Model3{*opts.q_n});
    for (const auto& z : zs) {
      const SigmaTilde st = sigma_tilde(spec, z, effective, opts.mc_draws, opts.seed);
      const Matrix sigma = xi_inv * st.value * xi_inv;
      out.per_class.push_back({z, 0.5 * (sigma + sigma.transpose())});
    }
    out.center_scale = effective.q() ? std::sqrt(*effective.q()) : 1.0;
    break;
  }
  default:
    throw ValidationError("theory_cov: no closed-form limit for " + noise.tag() +
                          " (use hetero_theory_cov for heteroscedastic model 1)");
  }
  return out;
}

HeteroCov hetero_theory_cov(const DistributionSpec& spec, const SigmaFn& sigma_fn, Index i, Index n) {
  if (n < 2 || i < 0 || i >= n) throw ValidationError("hetero_theory_cov: need 0 <= i < n, n >= 2");
  require_symmetric(sigma_fn, n);
  const PopulationMoments mom = moments(spec);
  const Matrix xi_inv = mom.xi_inverse();
  double s = 0.0;
  for (Index j = 0; j < n; ++j)
    if (j != i) {
      const double sij = sigma_fn(i, j, n);
      s += sij * sij;
    }
  s /= static_cast<double>(n);

  HeteroCov out;
  out.sigma_i = s * mom.xi;
  if (s > 0.0) out.whitening = spd_inv_sqrt(out.sigma_i);
  out.conjugated = xi_inv * out.sigma_i * xi_inv;
  out.conjugated = 0.5 * (out.conjugated + out.conjugated.transpose()).eval();
  out.resolved = 0.25 * out.conjugated;
  return out;
}

Alignment align(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols())
    throw ValidationError("align: source and target shapes differ");
  const SmallSvd svd = svd_small(source.transpose() * target);
  Alignment out;
  out.w = svd.left * svd.right.transpose();
  const double top = svd.values(0);
  out.degenerate = top == 0.0 || svd.values(svd.values.size() - 1) < 1e-10 * top;
  return out;
}

std::vector<Matrix> orthogonal_conjugations(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() || a.rows() > 16)
    throw ValidationError("orthogonal_conjugations: need two square matrices of equal small size");
  using ColMatrix = Eigen::MatrixXd;
  Eigen::SelfAdjointEigenSolver<ColMatrix> ea(ColMatrix(0.5 * (a + a.transpose())));
  Eigen::SelfAdjointEigenSolver<ColMatrix> eb(ColMatrix(0.5 * (b + b.transpose())));
  const Index d = a.rows();
  std::vector<Matrix> out;
  // Flipping every sign gives the same conjugation, so the first sign stays +1.
  for (unsigned mask = 0; mask < (1u << (d - 1)); ++mask) {
    Vector signs = Vector::Ones(d);
    for (Index k = 1; k < d; ++k)
      if (mask & (1u << (k - 1))) signs(k) = -1.0;
    out.emplace_back(eb.eigenvectors() * signs.asDiagonal() * ea.eigenvectors().transpose());
  }
  std::stable_sort(out.begin(), out.end(), [&](const Matrix& x, const Matrix& y) {
    return (x * a * x.transpose() - b).norm() < (y * a * y.transpose() - b).norm();
  });
  return out;
}

DecompositionReport decompose(const SymmetricMatrix& b, const SymmetricMatrix& b_hat, Index d) {
  const Index n = b.n();
  if (b_hat.n() != n) throw ValidationError("decompose: B and Bhat differ in size");
  if (d < 1 || d >= n) throw ValidationError("decompose: need 1 <= d < n");
  const SpectralPair sp = top_eigs(b, d);
  const SpectralPair sh = top_eigs(b_hat, d);
  if ((sp.values.array() <= 0.0).any() || (sh.values.array() <= 0.0).any())
    throw NumericalError("decompose: the top-d eigenvalues of B and Bhat must be positive");

  const Matrix& u = sp.vectors;
  const Matrix& uh = sh.vectors;
  const Matrix cross = u.transpose() * uh;
  const SmallSvd svd = svd_small(cross);
  const Matrix w = svd.left * svd.right.transpose();

  const Matrix s_half = diag_pow(sp.values, 0.5);
  const Matrix s_mhalf = diag_pow(sp.values, -0.5);
  const Matrix sh_half = diag_pow(sh.values, 0.5);
  const Matrix sh_mhalf = diag_pow(sh.values, -0.5);

  const Matrix noise = b_hat.data() - b.data();
  const Matrix nu = noise * u;
  const Matrix resid = uh - u * w;
  const Matrix n_resid = noise * resid;

  DecompositionReport rep;
  rep.w_star = w;
  rep.degenerate = sp.degenerate || sh.degenerate || svd.values(d - 1) < 1e-10 * svd.values(0);
  rep.terms[0] = nu * s_mhalf * w;
  rep.terms[1] = -nu * (s_mhalf * w - w * sh_mhalf);
  rep.terms[2] = -u * (u.transpose() * nu) * w * sh_mhalf;
  rep.terms[3] = (n_resid - u * (u.transpose() * n_resid)) * sh_mhalf;
  rep.terms[4] = u * (cross - w) * sh_half;
  rep.terms[5] = u * (w * sh_half - s_half * w);

  const Matrix xhat = uh * sh_half;
  const Matrix lhs = xhat - u * s_half * w;
  Matrix sum = Matrix::Zero(n, d);
  for (const auto& t : rep.terms) sum += t;
  rep.identity_residual = (sum - lhs).norm();
  rep.xhat_norm = xhat.norm();
  const double bnorm = b.data().norm();
  rep.rank_excess = bnorm > 0.0 ? (b.data() - u * (u.transpose() * b.data())).norm() / bnorm : 0.0;

  const double root_n = std::sqrt(static_cast<double>(n));
  for (size_t t = 0; t < 6; ++t) rep.term_rows[t] = root_n * rep.terms[t].rowwise().norm();
  rep.remainder_rows = root_n * (sum - rep.terms[0]).rowwise().norm();
  return rep;
}

double bound_ratio(const BoundRow& row, size_t which) {
  switch (which) {
  case 0: return row.perturbation;
  case 1: return row.eigen_floor;
  case 2: return row.procrustes;
  case 3: return row.juxtaposition;
  case 4: return row.juxtaposition_sqrt;
  case 5: return row.sup_row;
  case 6: return row.mean_row;
  default: throw ValidationError("bound_ratio: index out of range");
  }
}

BoundTable bound_checks(const DistributionSpec& spec, const NoiseSpec& noise, const std::vector<Index>& n_grid,
                        const BoundOptions& opts) {
  if (n_grid.size() < 3) throw ValidationError("bound_checks: n_grid needs at least 3 sizes");
  if (!std::is_sorted(n_grid.begin(), n_grid.end())) throw ValidationError("bound_checks: n_grid must ascend");
  if (opts.replicates < 1) throw ValidationError("bound_checks: need at least one replicate");
  const double center_scale = noise.q() ? std::sqrt(*noise.q()) : 1.0;
  const Index d = opts.d;
  const size_t reps = static_cast<size_t>(opts.replicates);

  std::vector<std::optional<BoundRow>> cells(n_grid.size() * reps);
  detail::parallel_for(cells.size(), opts.threads, [&](size_t cell) {
    const Index n = n_grid[cell / reps];
    const auto r = static_cast<std::uint64_t>(cell % reps);
    const std::uint64_t key = derive_key(opts.seed, {0xb0u, static_cast<std::uint64_t>(n), r});
    try {
      const PointCloud cloud = sample(spec, n, derive_key(key, {1}));
      const SymmetricMatrix dist = distance_matrix(cloud.points);
      const Perturbation pert = perturb(dist, noise, derive_key(key, {2}));
      const SymmetricMatrix b = double_center(dist.squared());
      const SymmetricMatrix b_hat = double_center(pert.delta_sq);
      const SpectralPair sp = top_eigs(b, d);
      const SpectralPair sh = top_eigs(b_hat, d);
      if ((sp.values.array() <= 0.0).any() || (sh.values.array() <= 0.0).any())
        throw NumericalError("non-positive leading eigenvalue");

      const double nn = static_cast<double>(n);
      const double logn = std::log(nn);
      BoundRow row;
      row.n = n;
      row.perturbation = spectral_norm(SymmetricMatrix::from_upper(b_hat.data() - b.data())) / std::sqrt(nn * logn);
      row.eigen_floor = sp.values(d - 1) / nn;

      const Matrix cross = sp.vectors.transpose() * sh.vectors;
      const SmallSvd svd = svd_small(cross);
      const Matrix w = svd.left * svd.right.transpose();
      row.procrustes = norms(cross - w).spectral / (logn / nn);
      row.juxtaposition = (w * sh.values.asDiagonal() - sp.values.asDiagonal() * w).norm() / logn;
      row.juxtaposition_sqrt =
          (w * diag_pow(sh.values, 0.5) - diag_pow(sp.values, 0.5) * w).norm() / (logn / std::sqrt(nn));

      const Matrix xhat = sh.vectors * diag_pow(sh.values, 0.5);
      const Matrix reference = center_scale * center_rows(cloud.points);
      const Matrix err = xhat * align(xhat, reference).w - reference;
      const Vector row_err = err.rowwise().norm();
      const double rate = std::sqrt(logn / nn);
      row.sup_row = row_err.maxCoeff() / rate;
      row.mean_row = row_err.mean() / rate;
      cells[cell] = row;
    } catch (const NumericalError&) {
      cells[cell].reset();
    }
  });

  BoundTable table;
  for (size_t g = 0; g < n_grid.size(); ++g) {
    std::array<std::vector<double>, 7> values;
    for (size_t r = 0; r < reps; ++r) {
      const auto& c = cells[g * reps + r];
      if (!c) {
        ++table.failed_replicates;
        continue;
      }
      for (size_t k = 0; k < 7; ++k) values[k].push_back(bound_ratio(*c, k));
    }
    BoundRow med;
    med.n = n_grid[g];
    med.perturbation = median(values[0]);
    med.eigen_floor = median(values[1]);
    med.procrustes = median(values[2]);
    med.juxtaposition = median(values[3]);
    med.juxtaposition_sqrt = median(values[4]);
    med.sup_row = median(values[5]);
    med.mean_row = median(values[6]);
    table.medians.push_back(med);
  }

  // Values at rounding level count as exact zeros.
  constexpr double numerically_zero = 1e-9;
  for (size_t k = 0; k < 7; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& row : table.medians) {
      double v = std::abs(bound_ratio(row, k));
      if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
      if (v < numerically_zero) v = 0.0;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi == 0.0) table.variation[k] = 1.0;
    else if (lo == 0.0) table.variation[k] = std::numeric_limits<double>::infinity();
    else table.variation[k] = hi / lo;
    table.flagged[k] = !(table.variation[k] < 2.0);
  }
  return table;
}

GrowthCheck growth_check(const SymmetricMatrix& d) {
  GrowthCheck out;
  out.max_row_sum_sq = d.data().array().square().rowwise().sum().maxCoeff();
  const double logn = std::log(static_cast<double>(d.n()));
  out.log4n = logn * logn * logn * logn;
  out.ok = out.max_row_sum_sq >= 10.0 * out.log4n;
  return out;
}

} // namespace mdsclt
