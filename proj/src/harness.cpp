#include "mdsclt/harness.hpp"

#include "mdsclt/cmds.hpp"
#include "mdsclt/error.hpp"
#include "mdsclt/io.hpp"
#include "mdsclt/rawstress.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

namespace mdsclt {

void ExperimentConfig::validate() const {
  if (replicates < 2) throw ValidationError("config: replicates must be >= 2");
  if (n_list.empty()) throw ValidationError("config: n_list is empty");
  if (!std::is_sorted(n_list.begin(), n_list.end()) ||
      std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
    throw ValidationError("config: n_list must be strictly ascending");
  if (d < 1) throw ValidationError("config: d must be >= 1");
  if (n_list.front() < std::max<Index>(d + 2, distribution.dim() + 2))
    throw ValidationError("config: smallest n is too small for d");
  if (normality_rows_per_class < 0 || scree_size < 1) throw ValidationError("config: bad sampling sizes");
  if (checks.bounds && n_list.size() < 3) throw ValidationError("config: the bounds check needs at least 3 sizes");
  if (checks.hetero_bias && !distribution.mixture())
    throw ValidationError("config: the hetero_bias check needs a point-mass mixture");
}

namespace {

struct ClassSlot {
  Matrix cov;        // of sqrt(n) deviations
  Vector aligned_mean;
  Vector target;
  Vector dev_sum;    // sqrt(n) deviations
  Matrix dev_outer;
  Index count = 0;
  Vector designated;
  Matrix thin;       // sqrt(n) deviations kept for the normality pool
};

struct ReplicateOut {
  bool ok = false;
  std::string error;
  std::vector<ClassSlot> classes;
  Vector scree;
  double leading_row = 0.0;
  double remainder_row = 0.0;
  double relative_residual = 0.0;
  bool decomposition_degenerate = false;
  long stress_increases = 0;
  bool stress_converged = true;
  Matrix dump;
};

double median_of(const Vector& v) {
  std::vector<double> x(v.data(), v.data() + v.size());
  if (x.empty()) return 0.0;
  const size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  double m = x[mid];
  if (x.size() % 2 == 0) m = 0.5 * (m + *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

double median_of(const std::vector<double>& v) {
  return median_of(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()))));
}

Matrix sign_sqrt(const SymmetricMatrix& sq) {
  return sq.data().unaryExpr([](double v) { return v < 0.0 ? -std::sqrt(-v) : std::sqrt(v); });
}

ReplicateOut run_replicate(const ExperimentConfig& cfg, Index n, std::uint64_t r, double center_scale,
                           Index classes) {
  ReplicateOut out;
  const std::uint64_t key = derive_key(cfg.seed, {static_cast<std::uint64_t>(n), r});
  const Index d = cfg.d;
  const PointCloud cloud = sample(cfg.distribution, n, derive_key(key, {1}));
  const SymmetricMatrix dist = distance_matrix(cloud.points);
  const Perturbation pert = perturb(dist, cfg.noise, derive_key(key, {2}));

  Matrix xhat;
  if (cfg.estimator == Estimator::cmds) {
    EmbedOptions eo;
    eo.extra_eigenvalues = 0;
    xhat = embed(pert.delta_sq, d, eo).config;
  } else {
    const SymmetricMatrix delta = pert.delta ? *pert.delta : SymmetricMatrix::from_upper(sign_sqrt(pert.delta_sq));
    StressResult sr = minimize_stress(delta, d);
    out.stress_increases = sr.increases;
    out.stress_converged = sr.converged;
    xhat = std::move(sr.final.config);
  }
  if (r == 0) {
    const Index k = std::min<Index>(cfg.scree_size, n - 1);
    out.scree = top_eigs(double_center(pert.delta_sq), k).values;
  }
  if (cfg.checks.decomposition) {
    const DecompositionReport rep = decompose(double_center(dist.squared()), double_center(pert.delta_sq), d);
    out.leading_row = median_of(rep.term_rows[0]);
    out.remainder_row = median_of(rep.remainder_rows);
    out.relative_residual = rep.relative_residual();
    out.decomposition_degenerate = rep.degenerate;
  }

  const Matrix reference = center_scale * center_rows(cloud.points);
  const Matrix aligned = xhat * align(xhat, reference).w;
  const double root_n = std::sqrt(static_cast<double>(n));
  const Matrix dev = root_n * (aligned - reference);

  std::vector<std::vector<Index>> members(static_cast<size_t>(classes));
  for (Index i = 0; i < n; ++i) {
    const int label = cloud.labels ? (*cloud.labels)[static_cast<size_t>(i)] : 0;
    members[static_cast<size_t>(label)].push_back(i);
  }
  out.classes.resize(static_cast<size_t>(classes));
  for (Index k = 0; k < classes; ++k) {
    const auto& rows = members[static_cast<size_t>(k)];
    ClassSlot& slot = out.classes[static_cast<size_t>(k)];
    const Index m = static_cast<Index>(rows.size());
    slot.count = m;
    slot.aligned_mean = Vector::Zero(d);
    slot.target = Vector::Zero(d);
    slot.dev_sum = Vector::Zero(d);
    slot.dev_outer = Matrix::Zero(d, d);
    slot.cov = Matrix::Zero(d, d);
    if (m == 0) continue;
    Matrix block(m, d);
    for (Index t = 0; t < m; ++t) {
      const Index i = rows[static_cast<size_t>(t)];
      block.row(t) = dev.row(i);
      slot.aligned_mean += aligned.row(i).transpose();
      slot.target += reference.row(i).transpose();
    }
    slot.aligned_mean /= static_cast<double>(m);
    slot.target /= static_cast<double>(m);
    slot.dev_sum = block.colwise().sum().transpose();
    slot.dev_outer = block.transpose() * block;
    if (m > 1) {
      const Matrix c = block.rowwise() - block.colwise().mean();
      slot.cov = (c.transpose() * c) / static_cast<double>(m - 1);
    }
    slot.designated = block.row(0).transpose();
    // evenly spaced rows, skipping the designated one
    const Index keep = std::min<Index>(cfg.normality_rows_per_class, m - 1);
    slot.thin.resize(keep, d);
    for (Index t = 0; t < keep; ++t) slot.thin.row(t) = block.row(1 + t * (m - 1) / keep);
  }

  if (!cfg.sample_dump_dir.empty()) {
    out.dump.resize(n, 3 + d);
    for (Index i = 0; i < n; ++i) {
      out.dump(i, 0) = static_cast<double>(r);
      out.dump(i, 1) = static_cast<double>(i);
      out.dump(i, 2) = cloud.labels ? (*cloud.labels)[static_cast<size_t>(i)] : 0;
      out.dump.row(i).tail(d) = aligned.row(i);
    }
  }
  out.ok = true;
  return out;
}

std::vector<std::optional<Matrix>> theory_per_class(const ExperimentConfig& cfg, Index n, Index classes,
                                                    const std::vector<Index>& designated_rows) {
  std::vector<std::optional<Matrix>> out(static_cast<size_t>(classes));
  if (!cfg.checks.clt || cfg.distribution.dim() != cfg.d) return out;
  switch (cfg.noise.model()) {
  case NoiseModel::model1:
  case NoiseModel::model2:
  case NoiseModel::model3: {
    const TheoryCov tc = theory_cov(cfg.distribution, cfg.noise);
    for (Index k = 0; k < classes; ++k) {
      const size_t src = std::min(static_cast<size_t>(k), tc.per_class.size() - 1);
      out[static_cast<size_t>(k)] = tc.per_class[src].sigma;
    }
    break;
  }
  case NoiseModel::model1_hetero: {
    const auto& h = std::get<Model1Hetero>(cfg.noise.variant());
    const SigmaFn fn = make_sigma_fn(h.sigma);
    for (Index k = 0; k < classes; ++k)
      out[static_cast<size_t>(k)] =
          hetero_theory_cov(cfg.distribution, fn, designated_rows[static_cast<size_t>(k)], n).resolved;
    break;
  }
  default:
    break;
  }
  return out;
}

std::string tag_estimator(Estimator e) { return e == Estimator::cmds ? "cmds" : "rawstress"; }

} // namespace

McReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  const double center_scale = cfg.noise.q() ? std::sqrt(*cfg.noise.q()) : 1.0;
  const Index classes = cfg.distribution.classes();
  const Index d = cfg.d;
  const auto reps = static_cast<size_t>(cfg.replicates);

  McReport report;
  report.model = cfg.noise.tag();
  report.estimator = tag_estimator(cfg.estimator);
  report.center_scale = center_scale;
  report.d = d;
  report.replicates = cfg.replicates;
  report.seed = cfg.seed;
  report.checks = cfg.checks;
  if (cfg.distribution.dim() != d)
    report.warnings.push_back("embedding dimension differs from the latent dimension; no theoretical covariance");

  for (const Index n : cfg.n_list) {
    std::vector<ReplicateOut> slots(reps);
    detail::parallel_for(reps, cfg.threads, [&](size_t r) {
      try {
        slots[r] = run_replicate(cfg, n, r, center_scale, classes);
      } catch (const NumericalError& e) {
        slots[r] = ReplicateOut{};
        slots[r].error = e.what();
      }
    });

    NReport nr;
    nr.n = n;
    nr.scree_threshold = std::pow(static_cast<double>(n), 2.0 / 3.0);
    std::vector<const ReplicateOut*> good;
    for (const auto& s : slots) {
      if (s.ok) good.push_back(&s);
      else ++nr.failed;
      nr.stress_increases += s.stress_increases;
      nr.stress_unconverged += s.stress_converged ? 0 : 1;
    }
    nr.replicates_ok = static_cast<Index>(good.size());
    if (slots.front().ok) nr.scree = slots.front().scree;
    if (nr.failed > 0)
      report.warnings.push_back("n=" + std::to_string(n) + ": " + std::to_string(nr.failed) +
                                " replicate(s) failed, first: " +
                                std::find_if(slots.begin(), slots.end(), [](auto& s) { return !s.ok; })->error);
    if (nr.failed > cfg.replicates / 100) report.valid = false;

    std::vector<Index> designated_rows(static_cast<size_t>(classes), 0);
    if (const auto* mix = cfg.distribution.mixture()) {
      const auto counts = class_counts(mix->weights, n);
      Index start = 0;
      for (size_t k = 0; k < counts.size(); ++k) {
        designated_rows[k] = start;
        start += counts[k];
      }
    }
    const auto theory = theory_per_class(cfg, n, classes, designated_rows);
    const PopulationMoments mom = moments(cfg.distribution);

    const double g = static_cast<double>(good.size());
    for (Index k = 0; k < classes && !good.empty(); ++k) {
      const auto ku = static_cast<size_t>(k);
      ClassReport cr;
      cr.label = static_cast<int>(k);
      if (const auto* mix = cfg.distribution.mixture()) cr.location = mix->locations.row(k).transpose();
      else cr.location = mom.mu;
      cr.empirical_mean = Vector::Zero(d);
      cr.target = Vector::Zero(d);
      cr.empirical_cov = Matrix::Zero(d, d);
      Vector dev_sum = Vector::Zero(d);
      Matrix dev_outer = Matrix::Zero(d, d);
      double total = 0.0;
      Matrix designated(static_cast<Index>(good.size()), d);
      Index pool_rows = static_cast<Index>(good.size());
      for (const auto* s : good) pool_rows += s->classes[ku].thin.rows();
      Matrix pool(pool_rows, d);
      Index at = 0;
      for (size_t t = 0; t < good.size(); ++t) {
        const ClassSlot& c = good[t]->classes[ku];
        cr.empirical_mean += c.aligned_mean;
        cr.target += c.target;
        cr.empirical_cov += c.cov;
        cr.rows += static_cast<double>(c.count);
        dev_sum += c.dev_sum;
        dev_outer += c.dev_outer;
        total += static_cast<double>(c.count);
        designated.row(static_cast<Index>(t)) = c.designated.transpose();
        pool.row(at++) = c.designated.transpose();
        for (Index i = 0; i < c.thin.rows(); ++i) pool.row(at++) = c.thin.row(i);
      }
      cr.empirical_mean /= g;
      cr.target /= g;
      cr.empirical_cov /= g;
      cr.rows /= g;

      if (cfg.checks.table1) {
        cr.cov_entry_variances = Matrix::Zero(d, d);
        for (const auto* s : good) cr.cov_entry_variances += (s->classes[ku].cov - cr.empirical_cov).cwiseAbs2();
        cr.cov_entry_variances /= std::max(1.0, g - 1.0);
      }
      cr.pooled_cov = total > 1.0 ? Matrix((dev_outer - dev_sum * dev_sum.transpose() / total) / (total - 1.0))
                                  : Matrix::Zero(d, d);
      const Matrix dc = designated.rowwise() - designated.colwise().mean();
      cr.designated_cov = good.size() > 1 ? Matrix(dc.transpose() * dc / (g - 1.0)) : Matrix::Zero(d, d);
      cr.theoretical_cov = theory[ku];

      const Vector gap = cr.empirical_mean - cr.target;
      cr.bias = gap.norm();
      Vector u = Vector::Zero(d);
      if (cr.bias > 0.0) u = gap / cr.bias;
      else u(0) = 1.0;
      const double nn = static_cast<double>(n);
      cr.bias_se = std::sqrt(std::max(0.0, u.dot(cr.empirical_cov * u)) / (nn * std::max(1.0, cr.rows)));
      double spread = 0.0;
      for (const auto* s : good) spread += std::pow(u.dot(s->classes[ku].aligned_mean - cr.empirical_mean), 2);
      cr.bias_se_replicates = good.size() > 1 ? std::sqrt(spread / (g - 1.0) / g) : 0.0;

      if (cfg.checks.clt && pool_rows >= 100) {
        try {
          cr.normality = normality_check(pool);
        } catch (const NumericalError& e) {
          report.warnings.push_back("n=" + std::to_string(n) + " class " + std::to_string(k) + ": " + e.what());
        }
      }
      nr.per_class.push_back(std::move(cr));
    }

    if (cfg.checks.decomposition && !good.empty()) {
      DecompositionSummary ds;
      std::vector<double> lead;
      std::vector<double> rem;
      for (const auto* s : good) {
        lead.push_back(s->leading_row);
        rem.push_back(s->remainder_row);
        ds.max_relative_residual = std::max(ds.max_relative_residual, s->relative_residual);
        if (s->decomposition_degenerate) ++ds.degenerate;
      }
      ds.median_leading_row = median_of(lead);
      ds.median_remainder_row = median_of(rem);
      nr.decomposition = ds;
    }

    if (!cfg.sample_dump_dir.empty() && !good.empty()) {
      std::filesystem::create_directories(cfg.sample_dump_dir);
      Index rows = 0;
      for (const auto* s : good) rows += s->dump.rows();
      Matrix all(rows, 3 + d);
      Index at = 0;
      for (const auto* s : good) {
        all.middleRows(at, s->dump.rows()) = s->dump;
        at += s->dump.rows();
      }
      write_text_atomic(cfg.sample_dump_dir + "/samples_n" + std::to_string(n) + ".csv",
                        "replicate,row,class" + [&] {
                          std::string h;
                          for (Index c = 0; c < d; ++c) h += ",x" + std::to_string(c + 1);
                          return h;
                        }() + "\n" + to_csv(all));
    }
    report.per_n.push_back(std::move(nr));
  }

  if (cfg.checks.bounds) {
    BoundOptions bo;
    bo.d = d;
    bo.replicates = cfg.replicates;
    bo.seed = cfg.seed;
    bo.threads = cfg.threads;
    report.bounds = bound_checks(cfg.distribution, cfg.noise, cfg.n_list, bo);
  }
  return report;
}

NormalityResult normality_check(const Matrix& samples) {
  const Index m = samples.rows();
  const Index d = samples.cols();
  if (m < 100) throw ValidationError("normality_check: need at least 100 samples, got " + std::to_string(m));
  if (d < 1) throw ValidationError("normality_check: no columns");
  const Vector mean = samples.colwise().mean().transpose();
  const Matrix c = samples.rowwise() - mean.transpose();
  const Matrix cov = c.transpose() * c / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(cov)};
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * top)
    throw NumericalError("normality_check: empirical covariance is singular");
  const Matrix white = c * spd_inv_sqrt(cov);

  NormalityResult res;
  res.m = m;
  const double rm = std::sqrt(static_cast<double>(m));
  res.critical = 1.6276 / (rm + 0.12 + 0.11 / rm);
  for (Index j = 0; j < d; ++j) {
    std::vector<double> x(static_cast<size_t>(m));
    for (Index i = 0; i < m; ++i) x[static_cast<size_t>(i)] = white(i, j);
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double f = 0.5 * std::erfc(-x[i] / std::numbers::sqrt2);
      ks = std::max({ks, static_cast<double>(i + 1) / static_cast<double>(m) - f,
                     f - static_cast<double>(i) / static_cast<double>(m)});
    }
    res.marginal_stats.push_back(ks);
    res.max_stat = std::max(res.max_stat, ks);
  }
  res.pass = res.max_stat < res.critical;
  return res;
}

Matrix ellipse_points(const Vector& mean, const Matrix& cov, double level) {
  if (mean.size() != 2 || cov.rows() != 2 || cov.cols() != 2)
    throw ValidationError("ellipse_points: needs a 2-vector and a 2 x 2 covariance");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("ellipse_points: level must lie in (0, 1)");
  if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-9 * cov.cwiseAbs().maxCoeff())
    throw ValidationError("ellipse_points: covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(cov)};
  if (es.eigenvalues().minCoeff() <= 0.0) throw ValidationError("ellipse_points: covariance is not positive definite");
  const double radius = std::sqrt(-2.0 * std::log(1.0 - level));
  const Matrix root = spd_sqrt(cov);
  constexpr Index kPoints = 128;
  Matrix out(kPoints, 2);
  for (Index t = 0; t < kPoints; ++t) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(t) / kPoints;
    Eigen::Vector2d u(std::cos(th), std::sin(th));
    out.row(t) = (mean + radius * root * u).transpose();
  }
  return out;
}

HeteroBiasReport hetero_bias_experiment(ExperimentConfig cfg) {
  if (!cfg.distribution.mixture()) throw ValidationError("hetero_bias_experiment: needs a point-mass mixture");
  cfg.checks.hetero_bias = true;
  cfg.checks.clt = false;
  const McReport rep = run(cfg);
  if (!rep.valid) throw NumericalError("hetero_bias_experiment: too many failed replicates");
  HeteroBiasReport out;
  out.model = rep.model;
  for (const auto& nr : rep.per_n) {
    BiasRow row;
    row.n = nr.n;
    for (const auto& c : nr.per_class) {
      row.bias.push_back(c.bias);
      row.se.push_back(c.bias_se);
      row.ratio.push_back(c.bias_se > 0.0 ? c.bias / c.bias_se : (c.bias > 0.0 ? INFINITY : 0.0));
      row.mean_bias += c.bias;
    }
    if (!nr.per_class.empty()) row.mean_bias /= static_cast<double>(nr.per_class.size());
    out.rows.push_back(std::move(row));
  }
  const BiasRow& last = out.rows.back();
  out.min_ratio_at_largest = *std::min_element(last.ratio.begin(), last.ratio.end());
  out.max_ratio_at_largest = *std::max_element(last.ratio.begin(), last.ratio.end());
  out.bias_persists = out.min_ratio_at_largest > 5.0;
  out.trend_to_zero = !(last.mean_bias > 0.5 * out.rows.front().mean_bias);
  return out;
}

} // namespace mdsclt
