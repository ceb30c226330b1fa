#include "mdsclt/cmds.hpp"

#include "mdsclt/error.hpp"

#include <algorithm>
#include <cmath>

namespace mdsclt {

namespace {

// Tie among the first d values or between value d and the next one. Ties
// further down (the scree tail) do not affect the embedding.
bool tie_up_to(const Vector& all, Index d) {
  const double scale = all.size() > 0 ? all.cwiseAbs().maxCoeff() : 0.0;
  const Index last = std::min<Index>(d, all.size() - 1);
  for (Index i = 0; i < last; ++i)
    if (all(i) - all(i + 1) < 1e-10 * scale) return true;
  return false;
}

} // namespace

Embedding embed_centered(const SymmetricMatrix& b, Index d, const EmbedOptions& opts) {
  const Index n = b.n();
  if (d < 1 || d > n - 1)
    throw ValidationError("embed: need 1 <= d <= n - 1 (d=" + std::to_string(d) + ", n=" + std::to_string(n) + ")");
  const Index k = std::min<Index>(n, d + std::max<Index>(0, opts.extra_eigenvalues));
  const SpectralPair sp = top_eigs(b, k);

  Embedding e;
  e.all_top_eigenvalues = sp.values;
  e.eigenvalues = sp.values.head(d);
  e.eigenvectors = sp.vectors.leftCols(d);
  // with k == d the solver's flag already covers the gap to eigenvalue d+1
  e.degenerate = k == d ? sp.degenerate : tie_up_to(sp.values, d);
  e.config.resize(n, d);
  // round-off on an exactly rank-deficient B leaves eigenvalues of order eps * |B|
  const double floor = 1e-12 * sp.values.cwiseAbs().maxCoeff();
  for (Index c = 0; c < d; ++c) {
    const double lambda = sp.values(c);
    if (lambda <= floor) {
      if (!opts.allow_deficient)
        throw NumericalError("embed: eigenvalue " + std::to_string(c + 1) + " of B is " + std::to_string(lambda) +
                             " (not positive); lower d or allow a deficient embedding");
      e.deficient = true;
      e.warnings.push_back("eigenvalue " + std::to_string(c + 1) + " is non-positive; column zero-filled");
      e.config.col(c).setZero();
    } else {
      e.config.col(c) = std::sqrt(lambda) * sp.vectors.col(c);
    }
  }
  if (e.degenerate) e.warnings.emplace_back("near-degenerate eigenvalues; columns are not unique");
  return e;
}

Embedding embed(const SymmetricMatrix& delta_sq, Index d, const EmbedOptions& opts) {
  return embed_centered(double_center(delta_sq), d, opts);
}

Index select_dim_from_eigenvalues(const Vector& eigenvalues_desc, Index n) {
  const double threshold = std::pow(static_cast<double>(n), 2.0 / 3.0);
  Index d_hat = 0;
  for (Index k = 0; k < eigenvalues_desc.size(); ++k)
    if (eigenvalues_desc(k) >= threshold) d_hat = k + 1;
  return d_hat;
}

DimSelection select_dim(const SymmetricMatrix& delta_sq, Index max_d) {
  const Index n = delta_sq.n();
  if (max_d < 1 || max_d > n - 1) throw ValidationError("select_dim: need 1 <= max_d <= n - 1");
  DimSelection out;
  out.threshold = std::pow(static_cast<double>(n), 2.0 / 3.0);
  out.eigenvalues = top_eigs(double_center(delta_sq), max_d).values;
  out.d_hat = select_dim_from_eigenvalues(out.eigenvalues, n);
  return out;
}

Embedding sub_embed(const Embedding& e, Index d_prime) {
  if (d_prime < 1 || d_prime > e.d()) throw ValidationError("sub_embed: need 1 <= d_prime <= d");
  Embedding out;
  out.config = e.config.leftCols(d_prime);
  out.eigenvalues = e.eigenvalues.head(d_prime);
  out.eigenvectors = e.eigenvectors.leftCols(d_prime);
  out.all_top_eigenvalues = e.all_top_eigenvalues;
  out.deficient = e.deficient && (out.config.colwise().norm().array() == 0.0).any();
  out.degenerate = tie_up_to(e.all_top_eigenvalues, d_prime);
  if (out.degenerate) out.warnings.emplace_back("eigenvalue tie at the truncation point");
  return out;
}

double strain(const Matrix& config, const SymmetricMatrix& b) {
  if (config.rows() != b.n()) throw ValidationError("strain: configuration and B disagree on n");
  return (config * config.transpose() - b.data()).norm();
}

} // namespace mdsclt
