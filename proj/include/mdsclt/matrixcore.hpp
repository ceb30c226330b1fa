#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace mdsclt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric n x n matrix. The stored grid is exactly symmetric: every
/// constructor mirrors one triangle onto the other, so data(i,j) and data(j,i)
/// are the same double.
class SymmetricMatrix {
public:
  SymmetricMatrix() = default;

  static SymmetricMatrix zeros(Index n);

  /// Takes the upper triangle (diagonal included) and mirrors it.
  static SymmetricMatrix from_upper(const Matrix& m);

  /// Full matrix that must already be symmetric to within `rel_tol` relative
  /// to its largest entry; the two triangles are averaged.
  static SymmetricMatrix from_full(const Matrix& m, double rel_tol = 1e-9);

  /// Entry-wise square, used to go from D to D^2 or from Delta to Delta^2.
  SymmetricMatrix squared() const;

  Index n() const noexcept { return data_.rows(); }
  double operator()(Index i, Index j) const { return data_(i, j); }
  const Matrix& data() const noexcept { return data_; }

  /// True iff every diagonal entry is exactly zero.
  bool hollow() const noexcept { return hollow_; }

  /// Throws ValidationError naming `what` unless the matrix is hollow.
  void require_hollow(const std::string& what) const;

private:
  explicit SymmetricMatrix(Matrix data);
  Matrix data_;
  bool hollow_ = false;
};

/// Leading eigenpairs of a symmetric matrix, values descending.
struct SpectralPair {
  Vector values;
  Matrix vectors; // n x k, orthonormal columns
  /// Some gap among the returned values, or between the k-th and the next
  /// eigenvalue, is below 1e-10 * ||m||.
  bool degenerate = false;
  long iterations = 0;
};

struct SmallSvd {
  Matrix left;  // W1
  Vector values; // descending, non-negative
  Matrix right; // W2
};

struct Norms {
  double spectral = 0.0;
  double frobenius = 0.0;
  double two_to_inf = 0.0;
};

/// B = -1/2 P sq P with P = I - 11^T/n.
SymmetricMatrix double_center(const SymmetricMatrix& sq);

/// Options for the iterative path of top_eigs.
struct EigenOptions {
  Index dense_cutoff = 256;  // n at or below this uses full tridiagonalization
  long max_iterations = -1;  // -1 means 10 * n
  double tolerance = 1e-11;  // relative residual target
};

/// k algebraically largest eigenpairs. Each column's largest-|entry|
/// component is made non-negative so the output is deterministic.
SpectralPair top_eigs(const SymmetricMatrix& m, Index k, const EigenOptions& opts = {});

/// SVD of a small square matrix (d <= 32): m = left * diag(values) * right^T.
SmallSvd svd_small(const Matrix& m);

Norms norms(const Matrix& m);

struct ExtremeEigenvalues {
  double min = 0.0;
  double max = 0.0;
  long steps = 0;
};

/// Smallest and largest eigenvalue by Lanczos with full reorthogonalization,
/// to relative accuracy `tol`. Dense for small n.
ExtremeEigenvalues extreme_eigenvalues(const SymmetricMatrix& m, double tol = 1e-10);

/// Spectral norm only, exploiting symmetry (max |eigenvalue|).
double spectral_norm(const SymmetricMatrix& m);

/// Points (rows) -> Euclidean distance matrix, exactly hollow.
SymmetricMatrix distance_matrix(const Matrix& points);

/// Column-centered copy: P * m.
Matrix center_rows(const Matrix& m);

/// Symmetric square root and inverse square root of an SPD matrix.
Matrix spd_sqrt(const Matrix& m);
Matrix spd_inv_sqrt(const Matrix& m);

} // namespace mdsclt
