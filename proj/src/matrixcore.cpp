#include "mdsclt/matrixcore.hpp"

#include "mdsclt/error.hpp"
#include "mdsclt/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numeric>
#include <vector>

namespace mdsclt {

namespace {

using ColMatrix = Eigen::MatrixXd;

void fix_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index arg = 0;
    double best = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

bool has_small_gap(const Vector& sorted_desc, Index k, double scale) {
  const Index upto = std::min<Index>(k + 1, sorted_desc.size());
  for (Index i = 0; i + 1 < upto; ++i)
    if (sorted_desc(i) - sorted_desc(i + 1) < 1e-10 * scale) return true;
  return false;
}

SpectralPair dense_top(const SymmetricMatrix& m, Index k) {
  const Index n = m.n();
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(ColMatrix(m.data()));
  if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed", 0);
  const Vector& all = es.eigenvalues(); // ascending
  Vector desc = all.reverse();
  SpectralPair out;
  out.values = desc.head(k);
  out.vectors = Matrix(n, k);
  for (Index c = 0; c < k; ++c) out.vectors.col(c) = es.eigenvectors().col(n - 1 - c);
  fix_signs(out.vectors);
  const double scale = std::max(std::abs(all(0)), std::abs(all(n - 1)));
  out.degenerate = has_small_gap(desc, k, scale);
  return out;
}

ColMatrix orthonormalize(const ColMatrix& y) {
  Eigen::HouseholderQR<ColMatrix> qr(y);
  return qr.householderQ() * ColMatrix::Identity(y.rows(), y.cols());
}

// Block subspace iteration with Rayleigh-Ritz on m + shift*I. Converges to the
// block of largest-magnitude eigenvalues; a shift is introduced when the
// requested algebraic top-k is not guaranteed to sit inside that block.
// Returns nothing when the observed convergence rate predicts more work than a
// dense solve; only with the default iteration cap and n in the dense envelope.
std::optional<SpectralPair> iterative_top(const SymmetricMatrix& m, Index k, const EigenOptions& opts) {
  const Index n = m.n();
  const Index block = std::min<Index>(n, k + std::max<Index>(k, 10));
  const long cap = opts.max_iterations > 0 ? opts.max_iterations : 10 * static_cast<long>(n);
  const Matrix& a = m.data();
  const bool may_bail = opts.max_iterations <= 0 && n <= 5000;
  // 2 n^2 block flops per step against roughly 10 n^3 for the dense path
  const double budget = 5.0 * static_cast<double>(n) / static_cast<double>(block);

  const Stream start(0x5eed5eedULL, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(block)});
  ColMatrix q(n, block);
  for (Index c = 0; c < block; ++c)
    for (Index r = 0; r < n; ++r) q(r, c) = start.normal(static_cast<std::uint64_t>(c * n + r));
  q = orthonormalize(q);

  double shift = 0.0;
  bool shift_checked = false;
  const double eps = std::numeric_limits<double>::epsilon();

  for (long it = 1; it <= cap; ++it) {
    ColMatrix y = a * q;
    if (shift != 0.0) y += shift * q;
    ColMatrix h = q.transpose() * y;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<ColMatrix> es(h);
    if (es.info() != Eigen::Success) throw ConvergenceError("Rayleigh-Ritz eigensolve failed", it);
    const Vector theta = es.eigenvalues().reverse();
    const ColMatrix s = es.eigenvectors().rowwise().reverse();
    const ColMatrix ritz = q * s;
    const ColMatrix mritz = y * s;

    const double normest = theta.cwiseAbs().maxCoeff() + std::abs(shift);
    if (may_bail && it >= 5 && it % 5 == 0) {
      // residuals shrink roughly like (|theta_block| / |theta_k|)^it
      const double rate = std::abs(theta(block - 1)) / std::max(std::abs(theta(k - 1)), 1e-300);
      const double needed = rate < 1.0 ? std::log(opts.tolerance) / std::log(rate) : INFINITY;
      if (needed > budget) return std::nullopt;
    }
    bool converged = true;
    for (Index i = 0; i < k && converged; ++i) {
      const double lambda = theta(i) - shift;
      const double res = (mritz.col(i) - theta(i) * ritz.col(i)).norm();
      const double target = std::max(opts.tolerance * std::max(1.0, std::abs(lambda)), 100.0 * eps * normest);
      converged = res <= target;
    }

    if (converged && !shift_checked) {
      shift_checked = true;
      // Eigenvalues outside the block have magnitude at most min|theta|.
      const double floor_mag = theta.cwiseAbs().minCoeff();
      if (theta(k - 1) <= floor_mag) {
        const double most_negative = std::max(-theta.minCoeff(), floor_mag);
        shift = 1.05 * most_negative + 1e-12 * normest;
        q = orthonormalize(ritz);
        continue;
      }
    }

    if (converged) {
      SpectralPair out;
      out.values = (theta.head(k).array() - shift).matrix();
      out.vectors = ritz.leftCols(k);
      fix_signs(out.vectors);
      Vector desc = (theta.array() - shift).matrix();
      out.degenerate = has_small_gap(desc, std::min<Index>(k, block - 1), desc.cwiseAbs().maxCoeff());
      out.iterations = it;
      return out;
    }
    q = orthonormalize(y);
  }
  throw ConvergenceError("top_eigs: subspace iteration did not converge within " + std::to_string(cap) +
                             " iterations",
                         cap);
}

} // namespace

SymmetricMatrix::SymmetricMatrix(Matrix data) : data_(std::move(data)) {
  hollow_ = (data_.diagonal().array() == 0.0).all();
}

SymmetricMatrix SymmetricMatrix::zeros(Index n) {
  if (n < 1) throw ValidationError("SymmetricMatrix: dimension must be positive");
  return SymmetricMatrix(Matrix::Zero(n, n));
}

SymmetricMatrix SymmetricMatrix::from_upper(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ValidationError("SymmetricMatrix: expected a non-empty square matrix, got " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()));
  Matrix out = m;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < i; ++j) out(i, j) = out(j, i);
  if (!out.allFinite()) throw ValidationError("SymmetricMatrix: non-finite entry");
  return SymmetricMatrix(std::move(out));
}

SymmetricMatrix SymmetricMatrix::from_full(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ValidationError("SymmetricMatrix: expected a non-empty square matrix, got " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  Matrix out = m;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale)
        throw ValidationError("SymmetricMatrix: entries (" + std::to_string(i) + "," + std::to_string(j) +
                              ") and their transpose differ beyond tolerance");
      const double avg = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = avg;
      out(j, i) = avg;
    }
  }
  if (!out.allFinite()) throw ValidationError("SymmetricMatrix: non-finite entry");
  return SymmetricMatrix(std::move(out));
}

SymmetricMatrix SymmetricMatrix::squared() const {
  return SymmetricMatrix(data_.array().square().matrix());
}

void SymmetricMatrix::require_hollow(const std::string& what) const {
  if (!hollow_) throw ValidationError(what + ": matrix must be hollow (zero diagonal)");
}

SymmetricMatrix double_center(const SymmetricMatrix& sq) {
  const Index n = sq.n();
  if (n < 2) throw ValidationError("double_center: need n >= 2");
  const Matrix& a = sq.data();
  const Vector row_mean = a.rowwise().mean();
  const double grand = row_mean.mean();
  Matrix b(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double v = -0.5 * (a(i, j) - row_mean(i) - row_mean(j) + grand);
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  return SymmetricMatrix::from_upper(b);
}

SpectralPair top_eigs(const SymmetricMatrix& m, Index k, const EigenOptions& opts) {
  const Index n = m.n();
  if (k < 1 || k > n)
    throw ValidationError("top_eigs: k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
  const Index block = k + std::max<Index>(k, 10);
  if (n <= opts.dense_cutoff || 2 * block > n) return dense_top(m, k);
  if (auto fast = iterative_top(m, k, opts)) return *fast;
  return dense_top(m, k);
}

SmallSvd svd_small(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > 32)
    throw ValidationError("svd_small: expected a square matrix of size 1..32");
  Eigen::JacobiSVD<ColMatrix> svd(ColMatrix(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SmallSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Norms norms(const Matrix& m) {
  Norms out;
  if (m.size() == 0) return out;
  out.frobenius = m.norm();
  out.two_to_inf = m.rowwise().norm().maxCoeff();
  const bool tall = m.rows() >= m.cols();
  const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  out.spectral = std::sqrt(std::max(0.0, extreme_eigenvalues(SymmetricMatrix::from_upper(gram), 1e-13).max));
  return out;
}

ExtremeEigenvalues extreme_eigenvalues(const SymmetricMatrix& m, double tol) {
  const Index n = m.n();
  if (n <= 256) {
    Eigen::SelfAdjointEigenSolver<ColMatrix> es(ColMatrix(m.data()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed", 0);
    return {es.eigenvalues()(0), es.eigenvalues()(n - 1), 0};
  }
  const Matrix& a = m.data();
  const Index max_steps = std::min<Index>(n, 600);
  ColMatrix basis(n, max_steps);
  std::vector<double> alpha, beta;
  const Stream start(0x1a2c05ULL, {static_cast<std::uint64_t>(n)});
  Vector v(n);
  for (Index r = 0; r < n; ++r) v(r) = start.normal(static_cast<std::uint64_t>(r));
  v.normalize();

  ExtremeEigenvalues out;
  for (Index j = 0; j < max_steps; ++j) {
    basis.col(j) = v;
    Vector w = a * v;
    alpha.push_back(v.dot(w));
    w -= alpha.back() * v;
    if (j > 0) w -= beta.back() * basis.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    const double b = w.norm();

    const Index size = j + 1;
    const bool check = size == max_steps || b <= 1e-14 * std::abs(alpha.front()) || size % 8 == 0;
    if (check) {
      ColMatrix t = ColMatrix::Zero(size, size);
      for (Index i = 0; i < size; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < size) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<ColMatrix> es(t);
      const Vector& theta = es.eigenvalues();
      out = {theta(0), theta(size - 1), static_cast<long>(size)};
      const double scale = std::max(std::abs(out.min), std::abs(out.max));
      const double res_min = b * std::abs(es.eigenvectors()(size - 1, 0));
      const double res_max = b * std::abs(es.eigenvectors()(size - 1, size - 1));
      // Ritz residuals bound the eigenvalue error quadratically once separated.
      if (b <= 1e-14 * scale || size == max_steps || (res_min <= tol * scale && res_max <= tol * scale)) return out;
    }
    beta.push_back(b);
    v = w / b;
  }
  return out;
}

double spectral_norm(const SymmetricMatrix& m) {
  const auto ext = extreme_eigenvalues(m);
  return std::max(std::abs(ext.min), std::abs(ext.max));
}

SymmetricMatrix distance_matrix(const Matrix& points) {
  const Index n = points.rows();
  if (n < 1) throw ValidationError("distance_matrix: no points");
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d(i, j) = (points.row(i) - points.row(j)).norm();
  return SymmetricMatrix::from_upper(d);
}

Matrix center_rows(const Matrix& m) {
  const Eigen::RowVectorXd mean = m.colwise().mean();
  return m.rowwise() - mean;
}

Matrix spd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(ColMatrix(0.5 * (m + m.transpose())));
  if (es.eigenvalues().minCoeff() < 0.0) throw NumericalError("spd_sqrt: matrix is not positive semidefinite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Matrix spd_inv_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(ColMatrix(0.5 * (m + m.transpose())));
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("spd_inv_sqrt: matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

} // namespace mdsclt
