#include "mdsclt/mdsclt.h"

#include "json_io.hpp"
#include "mdsclt/cmds.hpp"
#include "mdsclt/error.hpp"
#include "mdsclt/io.hpp"
#include "plot.hpp"

#include <cstring>
#include <new>
#include <string>

struct mdsclt_matrix {
  mdsclt::Matrix m;
};

namespace {

using namespace mdsclt;
using json_io::json;

thread_local std::string last_error;

template <class Fn>
mdsclt_status guard(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return MDSCLT_OK;
  } catch (const ValidationError& e) {
    last_error = e.what();
    return MDSCLT_INVALID_ARGUMENT;
  } catch (const ConvergenceError& e) {
    last_error = e.what();
    return MDSCLT_NOT_CONVERGED;
  } catch (const NumericalError& e) {
    last_error = e.what();
    return MDSCLT_NUMERICAL;
  } catch (const IoError& e) {
    last_error = e.what();
    return MDSCLT_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MDSCLT_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MDSCLT_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MDSCLT_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ValidationError(std::string(what) + " is NULL");
}

mdsclt_matrix* wrap(Matrix m) { return new mdsclt_matrix{std::move(m)}; }

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

SymmetricMatrix symmetric(const mdsclt_matrix* m, const char* what) {
  need(m, what);
  if (m->m.rows() != m->m.cols())
    throw ValidationError(std::string(what) + ": expected a square matrix, got " + std::to_string(m->m.rows()) +
                          " x " + std::to_string(m->m.cols()));
  try {
    return SymmetricMatrix::from_full(m->m);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

Index as_index(size_t v, const char* what) {
  if (v > static_cast<size_t>(1) << 40) throw ValidationError(std::string(what) + " is out of range");
  return static_cast<Index>(v);
}

ExperimentConfig config(const char* text, unsigned threads) {
  need(text, "config_json");
  ExperimentConfig cfg = json_io::config_from(json_io::parse(text, "config"));
  if (threads) cfg.threads = threads;
  return cfg;
}

} // namespace

extern "C" {

const char* mdsclt_last_error(void) { return last_error.c_str(); }

const char* mdsclt_version(void) { return "1.0.0"; }

mdsclt_status mdsclt_matrix_create(size_t rows, size_t cols, const double* data, mdsclt_matrix** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    Matrix m = Matrix::Zero(as_index(rows, "rows"), as_index(cols, "cols"));
    if (data) m = Eigen::Map<const Matrix>(data, m.rows(), m.cols());
    *out = wrap(std::move(m));
  });
}

void mdsclt_matrix_free(mdsclt_matrix* m) { delete m; }
size_t mdsclt_matrix_rows(const mdsclt_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }
size_t mdsclt_matrix_cols(const mdsclt_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }
const double* mdsclt_matrix_data(const mdsclt_matrix* m) { return m ? m->m.data() : nullptr; }

mdsclt_status mdsclt_matrix_read_csv(const char* path, mdsclt_matrix** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = wrap(read_matrix_csv(path));
  });
}

mdsclt_status mdsclt_matrix_write_csv(const char* path, const mdsclt_matrix* m) {
  return guard([&] {
    need(path, "path");
    need(m, "matrix");
    write_matrix_csv(path, m->m);
  });
}

mdsclt_status mdsclt_write_text(const char* path, const char* text) {
  return guard([&] {
    need(path, "path");
    need(text, "text");
    write_text_atomic(path, text);
  });
}

void mdsclt_string_free(char* s) { std::free(s); }

mdsclt_status mdsclt_sample_points(const char* distribution_json, size_t n, uint64_t seed, mdsclt_matrix** points,
                                   mdsclt_matrix** labels) {
  return guard([&] {
    need(distribution_json, "distribution_json");
    need(points, "points");
    *points = nullptr;
    if (labels) *labels = nullptr;
    const DistributionSpec spec = json_io::distribution_from(json_io::parse(distribution_json, "distribution"));
    PointCloud cloud = sample(spec, as_index(n, "n"), seed);
    if (labels && cloud.labels) {
      Matrix l(cloud.n(), 1);
      for (Index i = 0; i < cloud.n(); ++i) l(i, 0) = (*cloud.labels)[static_cast<size_t>(i)];
      *labels = wrap(std::move(l));
    }
    *points = wrap(std::move(cloud.points));
  });
}

mdsclt_status mdsclt_distance_matrix(const mdsclt_matrix* points, mdsclt_matrix** out) {
  return guard([&] {
    need(points, "points");
    need(out, "out");
    *out = nullptr;
    *out = wrap(distance_matrix(points->m).data());
  });
}

mdsclt_status mdsclt_perturb(const mdsclt_matrix* d, const char* noise_json, uint64_t seed, mdsclt_matrix** delta_sq,
                             mdsclt_matrix** delta) {
  return guard([&] {
    need(noise_json, "noise_json");
    need(delta_sq, "delta_sq");
    *delta_sq = nullptr;
    if (delta) *delta = nullptr;
    const SymmetricMatrix dist = symmetric(d, "distance matrix");
    dist.require_hollow("distance matrix");
    if ((dist.data().array() < 0.0).any()) throw ValidationError("distance matrix has negative entries");
    const NoiseSpec spec = json_io::noise_from(json_io::parse(noise_json, "noise"));
    const Perturbation p = perturb(dist, spec, seed);
    if (delta && p.delta) *delta = wrap(p.delta->data());
    *delta_sq = wrap(p.delta_sq.data());
  });
}

mdsclt_status mdsclt_embed(const mdsclt_matrix* delta_sq, size_t d, int allow_deficient, mdsclt_matrix** config,
                           char** sidecar_json) {
  return guard([&] {
    need(config, "config");
    *config = nullptr;
    if (sidecar_json) *sidecar_json = nullptr;
    const SymmetricMatrix sq = symmetric(delta_sq, "squared dissimilarities");
    sq.require_hollow("squared dissimilarities");
    EmbedOptions eo;
    eo.allow_deficient = allow_deficient != 0;
    const Embedding e = embed(sq, as_index(d, "d"), eo);
    if (sidecar_json) {
      json j = json_io::sidecar(e);
      j["n"] = e.n();
      *sidecar_json = dup(j.dump(2));
    }
    *config = wrap(e.config);
  });
}

mdsclt_status mdsclt_select_dim(const mdsclt_matrix* delta_sq, size_t max_d, char** result_json) {
  return guard([&] {
    need(result_json, "result_json");
    *result_json = nullptr;
    const SymmetricMatrix sq = symmetric(delta_sq, "squared dissimilarities");
    sq.require_hollow("squared dissimilarities");
    const DimSelection s = select_dim(sq, as_index(max_d, "max_d"));
    const json j{{"d_hat", s.d_hat},
                 {"threshold", s.threshold},
                 {"n", sq.n()},
                 {"eigenvalues", json_io::to_json(s.eigenvalues)},
                 {"all_top_eigenvalues", json_io::to_json(s.eigenvalues)}};
    *result_json = dup(j.dump(2));
  });
}

mdsclt_status mdsclt_rawstress(const mdsclt_matrix* delta, size_t d, const char* options_json, mdsclt_matrix** config,
                               char** result_json) {
  return guard([&] {
    need(config, "config");
    *config = nullptr;
    if (result_json) *result_json = nullptr;
    const SymmetricMatrix dl = symmetric(delta, "dissimilarities");
    dl.require_hollow("dissimilarities");
    StressOptions so;
    json echo = json::object();
    if (options_json) {
      const json o = json_io::parse(options_json, "rawstress options");
      try {
        const std::string init = o.value("init", std::string("cmds"));
        if (init == "random") so.random_seed = o.value("seed", std::uint64_t{0});
        else if (init != "cmds") throw ValidationError("rawstress: init must be \"cmds\" or \"random\"");
        so.max_iter = o.value("max_iter", so.max_iter);
        so.tol = o.value("tol", so.tol);
      } catch (const json::exception& e) {
        throw ValidationError(std::string("rawstress options: ") + e.what());
      }
    }
    const StressResult r = minimize_stress(dl, as_index(d, "d"), so);
    if (result_json) {
      json j = json_io::to_json(r);
      j["init"] = so.random_seed ? "random" : "cmds";
      if (so.random_seed) j["seed"] = *so.random_seed;
      j["max_iter"] = so.max_iter;
      j["tol"] = so.tol;
      *result_json = dup(j.dump(2));
    }
    *config = wrap(r.final.config);
  });
}

mdsclt_status mdsclt_theory_cov(const char* distribution_json, const char* noise_json, const char* options_json,
                                char** result_json) {
  return guard([&] {
    need(distribution_json, "distribution_json");
    need(noise_json, "noise_json");
    need(result_json, "result_json");
    *result_json = nullptr;
    const DistributionSpec spec = json_io::distribution_from(json_io::parse(distribution_json, "distribution"));
    const NoiseSpec noise = json_io::noise_from(json_io::parse(noise_json, "noise"));
    const json o = options_json ? json_io::parse(options_json, "theory options") : json::object();
    json out;
    try {
      if (noise.model() == NoiseModel::model1_hetero) {
        const json h = o.value("hetero", json::object());
        const Index n = h.value("n", Index{1000});
        const Index i = h.value("i", Index{0});
        const auto& m = std::get<Model1Hetero>(noise.variant());
        out = json_io::to_json(hetero_theory_cov(spec, make_sigma_fn(m.sigma), i, n));
        out["model"] = noise.tag();
        out["i"] = i;
        out["n"] = n;
      } else {
        TheoryOptions to;
        if (o.contains("q_n")) to.q_n = o["q_n"].get<double>();
        if (o.contains("z_list"))
          for (const auto& z : o["z_list"]) to.z_list.push_back(json_io::vector_from(z, "z_list"));
        to.mc_draws = o.value("mc_draws", to.mc_draws);
        to.seed = o.value("seed", to.seed);
        out = json_io::to_json(theory_cov(spec, noise, to));
        out["seed"] = to.seed;
      }
    } catch (const json::exception& e) {
      throw ValidationError(std::string("theory options: ") + e.what());
    }
    *result_json = dup(out.dump(2));
  });
}

mdsclt_status mdsclt_mc_run(const char* config_json, unsigned threads, char** report_json) {
  return guard([&] {
    need(report_json, "report_json");
    *report_json = nullptr;
    const ExperimentConfig cfg = config(config_json, threads);
    json j = json_io::to_json(run(cfg));
    j["config"] = json_io::to_json(cfg);
    *report_json = dup(j.dump(2));
  });
}

mdsclt_status mdsclt_diagnose(const char* config_json, unsigned threads, char** result_json) {
  return guard([&] {
    need(result_json, "result_json");
    *result_json = nullptr;
    ExperimentConfig cfg = config(config_json, threads);
    json out{{"config", json_io::to_json(cfg)}, {"model", cfg.noise.tag()}};

    json growth = json::array();
    for (const Index n : cfg.n_list) {
      const PointCloud cloud = sample(cfg.distribution, n, derive_key(cfg.seed, {0x67u, static_cast<std::uint64_t>(n)}));
      json g = json_io::to_json(growth_check(distance_matrix(cloud.points)));
      g["n"] = n;
      growth.push_back(std::move(g));
    }
    out["growth"] = std::move(growth);

    ExperimentConfig dc = cfg;
    dc.checks = Checks{};
    dc.checks.clt = false;
    dc.checks.table1 = false;
    dc.checks.decomposition = true;
    dc.checks.bounds = cfg.n_list.size() >= 3;
    const McReport rep = run(dc);
    json decomposition = json::array();
    for (const auto& nr : rep.per_n) {
      json jn = nr.decomposition ? json_io::to_json(*nr.decomposition) : json::object();
      jn["n"] = nr.n;
      jn["failed"] = nr.failed;
      decomposition.push_back(std::move(jn));
    }
    out["decomposition"] = std::move(decomposition);
    if (rep.bounds) out["bounds"] = json_io::to_json(*rep.bounds);
    if (cfg.checks.hetero_bias) out["hetero_bias"] = json_io::to_json(hetero_bias_experiment(cfg));
    out["warnings"] = rep.warnings;
    *result_json = dup(out.dump(2));
  });
}

mdsclt_status mdsclt_plot(const char* report_json, const char* kind, size_t n, char** svg) {
  return guard([&] {
    need(report_json, "report_json");
    need(kind, "kind");
    need(svg, "svg");
    *svg = nullptr;
    const json doc = json_io::parse(report_json, "report");
    std::optional<Index> pick;
    if (n) pick = as_index(n, "n");
    *svg = dup(plot::render_svg(doc, kind, pick));
  });
}

} // extern "C"
