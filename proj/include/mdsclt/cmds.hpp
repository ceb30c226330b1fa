#pragma once

#include "mdsclt/matrixcore.hpp"

#include <string>
#include <vector>

namespace mdsclt {

/// n x d configuration X = U S^{1/2} with the eigenvalues it came from.
struct Embedding {
  Matrix config;
  Vector eigenvalues;         // d leading eigenvalues of B, descending
  Vector all_top_eigenvalues; // d + extra leading eigenvalues, for scree output
  Matrix eigenvectors;        // U, n x d
  bool deficient = false;     // some of the d eigenvalues were <= 0 and zero-filled
  bool degenerate = false;    // eigenvalue tie inside or at the edge of the top d
  std::vector<std::string> warnings;

  Index n() const noexcept { return config.rows(); }
  Index d() const noexcept { return config.cols(); }
};

struct EmbedOptions {
  bool allow_deficient = false;
  Index extra_eigenvalues = 4;
};

/// Classical MDS of a squared-dissimilarity matrix.
Embedding embed(const SymmetricMatrix& delta_sq, Index d, const EmbedOptions& opts = {});

/// Same, starting from an already double-centered matrix B.
Embedding embed_centered(const SymmetricMatrix& b, Index d, const EmbedOptions& opts = {});

struct DimSelection {
  Index d_hat = 0;
  double threshold = 0.0; // n^{2/3}
  Vector eigenvalues;     // the max_d inspected eigenvalues
};

/// Largest k <= max_d with lambda_k(B) >= n^{2/3}.
DimSelection select_dim(const SymmetricMatrix& delta_sq, Index max_d);

/// The rule on its own, for eigenvalues already at hand.
Index select_dim_from_eigenvalues(const Vector& eigenvalues_desc, Index n);

/// First d_prime columns of an embedding.
Embedding sub_embed(const Embedding& e, Index d_prime);

/// Strain ||X X^T - B||_F.
double strain(const Matrix& config, const SymmetricMatrix& b);

} // namespace mdsclt
