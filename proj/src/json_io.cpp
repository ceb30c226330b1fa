#include "json_io.hpp"

#include "mdsclt/error.hpp"

#include <cmath>
#include <set>

namespace mdsclt::json_io {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ValidationError(msg); }

// nlohmann throws its own exception types on wrong member types; callers
// only know ValidationError.
template <class Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    bad(std::string(what) + ": " + e.what());
  }
}

const json& single_key(const json& j, const char* what, std::string& key) {
  if (!j.is_object() || j.size() != 1) bad(std::string(what) + ": expected an object with exactly one key");
  key = j.begin().key();
  return j.begin().value();
}

ScalarLaw law_from(const json& j) {
  std::string key;
  const json& body = single_key(j, "law", key);
  if (key == "uniform") return UniformLaw{body.at("a").get<double>()};
  if (key == "gaussian") return GaussianLaw{body.at("sigma").get<double>()};
  if (key == "two_point") return TwoPointLaw{body.at("lo").get<double>(), body.at("hi").get<double>()};
  bad("law: unknown family '" + key + "' (uniform, gaussian, two_point)");
}

json law_json(const ScalarLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, UniformLaw>) return {{"uniform", {{"a", l.a}}}};
        else if constexpr (std::is_same_v<T, GaussianLaw>) return {{"gaussian", {{"sigma", l.sigma}}}};
        else return {{"two_point", {{"lo", l.lo}, {"hi", l.hi}}}};
      },
      law);
}

SigmaRule sigma_from(const json& j) {
  std::string key;
  const json& body = single_key(j, "sigma", key);
  if (key == "constant") return ConstantSigma{body.at("sigma").get<double>()};
  if (key == "gap_linear") return GapLinearSigma{body.at("base").get<double>(), body.at("slope").get<double>()};
  if (key == "parity") return ParitySigma{body.at("c").get<double>()};
  bad("sigma: unknown rule '" + key + "' (constant, gap_linear, parity)");
}

json sigma_json(const SigmaRule& rule) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantSigma>) return {{"constant", {{"sigma", r.sigma}}}};
        else if constexpr (std::is_same_v<T, GapLinearSigma>)
          return {{"gap_linear", {{"base", r.base}, {"slope", r.slope}}}};
        else return {{"parity", {{"c", r.c}}}};
      },
      rule);
}

const char* model_name(NoiseModel m) {
  switch (m) {
  case NoiseModel::model1: return "model1";
  case NoiseModel::model2: return "model2";
  case NoiseModel::model3: return "model3";
  case NoiseModel::model1_hetero: return "model1_hetero";
  default: return "model2_hetero_uniform_scaled";
  }
}

json normality_json(const NormalityResult& r) {
  return {{"marginal_stats", r.marginal_stats}, {"max_stat", r.max_stat}, {"critical", r.critical},
          {"m", r.m}, {"pass", r.pass}};
}

json bound_row_json(const BoundRow& row) {
  json j{{"n", row.n}};
  for (size_t k = 0; k < kBoundRatioNames.size(); ++k) j[kBoundRatioNames[k]] = bound_ratio(row, k);
  return j;
}

} // namespace

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string(what) + ": invalid JSON: " + e.what());
  }
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from(const json& j, const char* what) {
  return guarded(what, [&] {
    const auto v = j.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  });
}

Matrix matrix_from(const json& j, const char* what) {
  return guarded(what, [&] {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) bad(std::string(what) + ": empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) bad(std::string(what) + ": ragged rows");
      for (size_t c = 0; c < rows[i].size(); ++c) m(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
    return m;
  });
}

DistributionSpec distribution_from(const json& j) {
  return guarded("distribution", [&]() -> DistributionSpec {
    std::string key;
    const json& body = single_key(j, "distribution", key);
    if (key == "three_point_mass") return three_point_mass();
    if (key == "point_mass")
      return DistributionSpec(PointMassMixture{matrix_from(body.at("locations"), "locations"),
                                               vector_from(body.at("weights"), "weights")});
    if (key == "gaussian")
      return DistributionSpec(GaussianDistribution{vector_from(body.at("mean"), "mean"),
                                                   matrix_from(body.at("covariance"), "covariance")});
    if (key == "uniform_box")
      return DistributionSpec(UniformBox{vector_from(body.at("lo"), "lo"), vector_from(body.at("hi"), "hi")});
    bad("distribution: unknown kind '" + key + "' (three_point_mass, point_mass, gaussian, uniform_box)");
  });
}

json to_json(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMassMixture>)
          return {{"point_mass", {{"locations", to_json(v.locations)}, {"weights", to_json(v.weights)}}}};
        else if constexpr (std::is_same_v<T, GaussianDistribution>)
          return {{"gaussian", {{"mean", to_json(v.mean)}, {"covariance", to_json(v.covariance)}}}};
        else return {{"uniform_box", {{"lo", to_json(v.lo)}, {"hi", to_json(v.hi)}}}};
      },
      spec.variant());
}

NoiseSpec noise_from(const json& j) {
  return guarded("noise", [&]() -> NoiseSpec {
    if (!j.is_object()) bad("noise: expected an object");
    const std::string model = j.at("model").get<std::string>();
    if (model == "model1") return NoiseSpec(Model1{law_from(j.at("law"))});
    if (model == "model2") return NoiseSpec(Model2{law_from(j.at("law"))});
    if (model == "model3") return NoiseSpec(Model3{j.at("q").get<double>()});
    if (model == "model1_hetero")
      return NoiseSpec(Model1Hetero{j.contains("law") ? law_from(j.at("law")) : ScalarLaw{GaussianLaw{1.0}},
                                    sigma_from(j.at("sigma"))});
    if (model == "model2_hetero_uniform_scaled") return NoiseSpec(Model2HeteroUniformScaled{});
    bad("noise: unknown model '" + model + "'");
  });
}

json to_json(const NoiseSpec& spec) {
  json j{{"model", spec.tag()}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model1> || std::is_same_v<T, Model2>) j["law"] = law_json(m.law);
        else if constexpr (std::is_same_v<T, Model3>) j["q"] = m.q;
        else if constexpr (std::is_same_v<T, Model1Hetero>) {
          j["law"] = law_json(m.law);
          j["sigma"] = sigma_json(m.sigma);
        }
      },
      spec.variant());
  return j;
}

ExperimentConfig config_from(const json& j) {
  return guarded("config", [&] {
    if (!j.is_object()) bad("config: expected an object");
    static const std::set<std::string> known{"distribution", "noise", "n_list", "d", "replicates", "seed",
                                             "estimator", "checks", "threads", "normality_rows_per_class",
                                             "scree_size", "sample_dump_dir"};
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) bad("config: unknown key '" + k + "'");
    ExperimentConfig cfg;
    if (j.contains("distribution")) cfg.distribution = distribution_from(j.at("distribution"));
    if (j.contains("noise")) cfg.noise = noise_from(j.at("noise"));
    if (j.contains("n_list")) cfg.n_list = j.at("n_list").get<std::vector<Index>>();
    if (j.contains("d")) cfg.d = j.at("d").get<Index>();
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<Index>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("estimator")) {
      const auto e = j.at("estimator").get<std::string>();
      if (e == "cmds") cfg.estimator = Estimator::cmds;
      else if (e == "rawstress") cfg.estimator = Estimator::rawstress;
      else bad("config: estimator must be \"cmds\" or \"rawstress\"");
    }
    if (j.contains("checks")) {
      const json& c = j.at("checks");
      if (!c.is_object()) bad("config: checks must be an object of booleans");
      for (const auto& [k, v] : c.items()) {
        const bool on = v.get<bool>();
        if (k == "clt") cfg.checks.clt = on;
        else if (k == "table1") cfg.checks.table1 = on;
        else if (k == "decomposition") cfg.checks.decomposition = on;
        else if (k == "bounds") cfg.checks.bounds = on;
        else if (k == "hetero_bias") cfg.checks.hetero_bias = on;
        else bad("config: unknown check '" + k + "'");
      }
    }
    if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    if (j.contains("normality_rows_per_class"))
      cfg.normality_rows_per_class = j.at("normality_rows_per_class").get<Index>();
    if (j.contains("scree_size")) cfg.scree_size = j.at("scree_size").get<Index>();
    if (j.contains("sample_dump_dir")) cfg.sample_dump_dir = j.at("sample_dump_dir").get<std::string>();
    cfg.validate();
    return cfg;
  });
}

json to_json(const ExperimentConfig& cfg) {
  return {{"distribution", to_json(cfg.distribution)},
          {"noise", to_json(cfg.noise)},
          {"n_list", cfg.n_list},
          {"d", cfg.d},
          {"replicates", cfg.replicates},
          {"seed", cfg.seed},
          {"estimator", cfg.estimator == Estimator::cmds ? "cmds" : "rawstress"},
          {"checks",
           {{"clt", cfg.checks.clt},
            {"table1", cfg.checks.table1},
            {"decomposition", cfg.checks.decomposition},
            {"bounds", cfg.checks.bounds},
            {"hetero_bias", cfg.checks.hetero_bias}}},
          {"normality_rows_per_class", cfg.normality_rows_per_class},
          {"scree_size", cfg.scree_size}};
}

json to_json(const McReport& r) {
  json per_n = json::array();
  for (const auto& nr : r.per_n) {
    json classes = json::array();
    for (const auto& c : nr.per_class) {
      json jc{{"label", c.label},
              {"location", to_json(c.location)},
              {"target", to_json(c.target)},
              {"rows", c.rows},
              {"empirical_mean", to_json(c.empirical_mean)},
              {"empirical_cov", to_json(c.empirical_cov)},
              {"pooled_cov", to_json(c.pooled_cov)},
              {"designated_cov", to_json(c.designated_cov)}};
      if (r.checks.table1) jc["cov_entry_variances"] = to_json(c.cov_entry_variances);
      if (c.theoretical_cov) jc["theoretical_cov"] = to_json(*c.theoretical_cov);
      if (c.normality) jc["normality"] = normality_json(*c.normality);
      if (r.checks.hetero_bias) {
        jc["bias"] = c.bias;
        jc["bias_se"] = c.bias_se;
        jc["bias_se_replicates"] = c.bias_se_replicates;
      }
      classes.push_back(std::move(jc));
    }
    json jn{{"n", nr.n},
            {"replicates_ok", nr.replicates_ok},
            {"failed", nr.failed},
            {"scree", to_json(nr.scree)},
            {"scree_threshold", nr.scree_threshold},
            {"per_class", std::move(classes)}};
    if (r.estimator == "rawstress") {
      jn["stress_increases"] = nr.stress_increases;
      jn["stress_unconverged"] = nr.stress_unconverged;
    }
    if (nr.decomposition) jn["decomposition"] = to_json(*nr.decomposition);
    per_n.push_back(std::move(jn));
  }
  json j{{"model", r.model},
         {"estimator", r.estimator},
         {"center_scale", r.center_scale},
         {"d", r.d},
         {"replicates", r.replicates},
         {"seed", r.seed},
         {"checks",
          {{"clt", r.checks.clt},
           {"table1", r.checks.table1},
           {"decomposition", r.checks.decomposition},
           {"bounds", r.checks.bounds},
           {"hetero_bias", r.checks.hetero_bias}}},
         {"valid", r.valid},
         {"warnings", r.warnings},
         {"per_n", std::move(per_n)}};
  if (r.bounds) j["bounds"] = to_json(*r.bounds);
  return j;
}

json to_json(const TheoryCov& t) {
  json classes = json::array();
  for (const auto& c : t.per_class) classes.push_back({{"z", to_json(c.z)}, {"sigma", to_json(c.sigma)}});
  return {{"model", model_name(t.model)},
          {"center_scale", t.center_scale},
          {"per_class", std::move(classes)}};
}

json to_json(const HeteroCov& h) {
  json j{{"sigma_i", to_json(h.sigma_i)}, {"conjugated", to_json(h.conjugated)}, {"resolved", to_json(h.resolved)}};
  j["whitening"] = h.whitening.size() ? to_json(h.whitening) : json(nullptr);
  return j;
}

json to_json(const BoundTable& t) {
  json rows = json::array();
  for (const auto& row : t.medians) rows.push_back(bound_row_json(row));
  json variation = json::object();
  json flagged = json::object();
  for (size_t k = 0; k < kBoundRatioNames.size(); ++k) {
    variation[kBoundRatioNames[k]] = std::isfinite(t.variation[k]) ? json(t.variation[k]) : json("inf");
    flagged[kBoundRatioNames[k]] = t.flagged[k];
  }
  return {{"medians", std::move(rows)},
          {"variation", std::move(variation)},
          {"flagged", std::move(flagged)},
          {"failed_replicates", t.failed_replicates}};
}

json to_json(const DecompositionSummary& s) {
  return {{"median_leading_row", s.median_leading_row},
          {"median_remainder_row", s.median_remainder_row},
          {"max_relative_residual", s.max_relative_residual},
          {"degenerate", s.degenerate}};
}

json to_json(const HeteroBiasReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n}, {"bias", row.bias}, {"se", row.se}, {"ratio", row.ratio},
                    {"mean_bias", row.mean_bias}});
  return {{"model", r.model},
          {"rows", std::move(rows)},
          {"min_ratio_at_largest", r.min_ratio_at_largest},
          {"max_ratio_at_largest", r.max_ratio_at_largest},
          {"bias_persists", r.bias_persists},
          {"trend_to_zero", r.trend_to_zero}};
}

json to_json(const GrowthCheck& g) {
  return {{"max_row_sum_sq", g.max_row_sum_sq}, {"log4n", g.log4n}, {"ok", g.ok}};
}

json sidecar(const Embedding& e) {
  return {{"eigenvalues", to_json(e.eigenvalues)},
          {"all_top_eigenvalues", to_json(e.all_top_eigenvalues)},
          {"flags", {{"deficient", e.deficient}, {"degenerate", e.degenerate}}},
          {"warnings", e.warnings}};
}

json to_json(const StressResult& r) {
  return {{"stress", r.final.stress},
          {"iterations", r.final.iteration},
          {"converged", r.converged},
          {"coincident", r.coincident},
          {"increases", r.increases},
          {"history", r.history}};
}

} // namespace mdsclt::json_io
