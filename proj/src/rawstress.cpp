#include "mdsclt/rawstress.hpp"

#include "mdsclt/cmds.hpp"
#include "mdsclt/error.hpp"
#include "mdsclt/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mdsclt {

double raw_stress(const Matrix& config, const SymmetricMatrix& delta) {
  const Index n = delta.n();
  if (config.rows() != n) throw ValidationError("raw_stress: configuration has " + std::to_string(config.rows()) +
                                                " rows, delta is " + std::to_string(n) + " x " + std::to_string(n));
  double s = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double r = delta(i, j) - (config.row(i) - config.row(j)).norm();
      s += r * r;
    }
  return s;
}

namespace {

Matrix initial_config(const SymmetricMatrix& delta, Index d, const StressOptions& opts) {
  const Index n = delta.n();
  if (!opts.random_seed) {
    EmbedOptions eo;
    eo.allow_deficient = true;
    eo.extra_eigenvalues = 0;
    return embed(delta.squared(), d, eo).config;
  }
  const Stream stream(*opts.random_seed, {0x7a});
  double scale = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) scale += std::abs(delta(i, j));
  scale = n > 1 ? scale / (0.5 * n * (n - 1)) : 1.0;
  if (scale == 0.0) scale = 1.0;
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) x(i, c) = scale * stream.normal(static_cast<std::uint64_t>(i * d + c));
  return center_rows(x);
}

} // namespace

// One step minimizes a quadratic majorizer. Pairs with delta >= 0 use the
// usual Cauchy-Schwarz bound (the Guttman transform). A negative delta turns
// -2 delta d_ij into a convex term; that is bounded by AM-GM, and the
// resulting weighted Laplacian by c I with c from Gershgorin, so the update
// stays closed form. With no negative entries it is exactly Guttman.
StressResult minimize_stress(const SymmetricMatrix& delta, Index d, const StressOptions& opts) {
  const Index n = delta.n();
  if (!delta.hollow()) throw ValidationError("minimize_stress: delta must have a zero diagonal");
  if (d < 1 || d > n - 1) throw ValidationError("minimize_stress: need 1 <= d <= n - 1");
  if (opts.max_iter < 0 || !(opts.tol >= 0.0)) throw ValidationError("minimize_stress: bad max_iter or tol");

  StressResult res;
  Matrix y = initial_config(delta, d, opts);
  double s = raw_stress(y, delta);
  res.history.push_back(s);

  Matrix by(n, d);
  Matrix ly(n, d);
  long it = 0;
  for (; it < opts.max_iter && s > 0.0; ++it) {
    by.setZero();
    ly.setZero();
    double max_degree = 0.0;
    std::vector<double> degree(static_cast<size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const double dij = (y.row(i) - y.row(j)).norm();
        const double del = delta(i, j);
        if (dij == 0.0) res.coincident = true;
        if (del >= 0.0) {
          if (dij == 0.0) continue; // zero-contribution convention
          const double w = del / dij;
          by.row(i) += w * (y.row(i) - y.row(j));
          by.row(j) += w * (y.row(j) - y.row(i));
        } else {
          const double w = -del / std::max(dij, 1e-12);
          ly.row(i) += w * (y.row(i) - y.row(j));
          ly.row(j) += w * (y.row(j) - y.row(i));
          degree[static_cast<size_t>(i)] += w;
          degree[static_cast<size_t>(j)] += w;
        }
      }
    for (double g : degree) max_degree = std::max(max_degree, g);
    const double c = 2.0 * max_degree;
    const Matrix x = (by + c * y - ly) / (static_cast<double>(n) + c);
    const double s_new = raw_stress(x, delta);
    if (s_new > s + stress_slack(s)) ++res.increases;
    res.history.push_back(s_new);
    const double decrease = s - s_new;
    y = x;
    const double prev = s;
    s = s_new;
    if (decrease < opts.tol * prev) {
      ++it;
      res.converged = true;
      break;
    }
  }
  if (s == 0.0) res.converged = true;
  res.final = {y, s, it};
  return res;
}

} // namespace mdsclt
