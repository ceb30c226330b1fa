// Command-line front end. Talks to the library only through mdsclt.h.

#include "mdsclt/mdsclt.h"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace {

struct Failure {
  mdsclt_status status;
  std::string message;
};

struct MatrixDeleter {
  void operator()(mdsclt_matrix* m) const { mdsclt_matrix_free(m); }
};
using MatrixPtr = std::unique_ptr<mdsclt_matrix, MatrixDeleter>;

struct StringDeleter {
  void operator()(char* s) const { mdsclt_string_free(s); }
};
using StringPtr = std::unique_ptr<char, StringDeleter>;

void check(mdsclt_status s, const std::string& context) {
  if (s != MDSCLT_OK) throw Failure{s, context + ": " + mdsclt_last_error()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{MDSCLT_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON when it looks like an object, otherwise a file name.
std::string json_arg(const std::string& value) {
  const auto first = value.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && value[first] == '{') return value;
  return slurp(value);
}

MatrixPtr read_csv(const std::string& path) {
  mdsclt_matrix* m = nullptr;
  check(mdsclt_matrix_read_csv(path.c_str(), &m), path);
  return MatrixPtr(m);
}

void write_csv(const std::string& path, const mdsclt_matrix* m) {
  check(mdsclt_matrix_write_csv(path.c_str(), m), path);
}

void write_text(const std::string& path, const std::string& text) {
  check(mdsclt_write_text(path.c_str(), text.c_str()), path);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text << (text.empty() || text.back() == '\n' ? "" : "\n");
  else write_text(path, text);
}

// Appends "key": value pairs to a JSON object text. Later duplicates win
// when the library parses it, so this overrides keys already present.
std::string with_fields(const std::string& json_text, const std::string& fields) {
  const auto close = json_text.rfind('}');
  if (close == std::string::npos) return json_text;
  const auto last = json_text.find_last_not_of(" \t\r\n", close - 1);
  const bool empty = last == std::string::npos || json_text[last] == '{';
  return json_text.substr(0, close) + (empty ? "" : ",") + "\n  " + fields + "\n" + json_text.substr(close);
}

// CSV outputs cannot carry the seed, so a small sidecar next to them does.
void write_meta(const std::string& out, const std::string& command, std::uint64_t seed, const std::string& extra) {
  std::string text = "{\n  \"command\": \"" + command + "\",\n  \"seed\": " + std::to_string(seed);
  if (!extra.empty()) text += ",\n  " + extra;
  text += "\n}\n";
  write_text(out + ".meta.json", text);
}

unsigned default_threads() {
  if (const char* env = std::getenv("MDSCLT_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v < 4096) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical MDS under noise: data generation, embedding, limit theory and Monte Carlo checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mdsclt_version()));

  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string in, out, noise, dist, config, kind, report, sidecar, labels_out, delta_out, init = "cmds";
  std::size_t n = 0, d = 2, max_d = 10, hetero_i = 0, hetero_n = 0;
  long max_iter = 500, mc_draws = 200000;
  double tol = 1e-8, q_n = -1.0;
  bool allow_deficient = false;
  std::string dump_dir;

  auto* gen = app.add_subcommand("gen-points", "sample latent points");
  gen->add_option("--distribution", dist, "distribution JSON (file or inline)")->required();
  gen->add_option("--n", n, "number of points")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out, "points CSV")->required();
  gen->add_option("--labels-out", labels_out, "class labels CSV");

  auto* distmat = app.add_subcommand("distmat", "Euclidean distance matrix of points");
  distmat->add_option("--in", in, "points CSV")->required();
  distmat->add_option("--out", out, "distance CSV")->required();

  auto* pert = app.add_subcommand("perturb", "noisy dissimilarities from a distance matrix");
  pert->add_option("--in", in, "distance CSV")->required();
  pert->add_option("--noise", noise, "noise JSON (file or inline)")->required();
  pert->add_option("--seed", seed, "random seed");
  pert->add_option("--out", out, "squared dissimilarity CSV")->required();
  pert->add_option("--delta-out", delta_out, "unsquared dissimilarity CSV, where the model defines one");

  auto* emb = app.add_subcommand("embed", "classical MDS of squared dissimilarities");
  emb->add_option("--in", in, "squared dissimilarity CSV")->required();
  emb->add_option("--d", d, "embedding dimension")->check(CLI::PositiveNumber);
  emb->add_option("--out", out, "configuration CSV")->required();
  emb->add_option("--sidecar", sidecar, "eigenvalue JSON (default: <out>.json)");
  emb->add_flag("--allow-deficient", allow_deficient, "zero-fill columns with non-positive eigenvalues");

  auto* sel = app.add_subcommand("select-dim", "dimension by the n^(2/3) eigenvalue rule");
  sel->add_option("--in", in, "squared dissimilarity CSV")->required();
  sel->add_option("--max-d", max_d, "largest dimension inspected")->check(CLI::PositiveNumber);
  sel->add_option("--out", out, "result JSON (default: stdout)");

  auto* raw = app.add_subcommand("rawstress", "raw-stress MDS by majorization");
  raw->add_option("--in", in, "dissimilarity CSV (not squared)")->required();
  raw->add_option("--d", d, "embedding dimension")->check(CLI::PositiveNumber);
  raw->add_option("--init", init, "cmds or random")->check(CLI::IsMember({"cmds", "random"}));
  raw->add_option("--seed", seed, "seed for --init random");
  raw->add_option("--max-iter", max_iter, "iteration cap")->check(CLI::NonNegativeNumber);
  raw->add_option("--tol", tol, "relative stress decrease to stop at")->check(CLI::NonNegativeNumber);
  raw->add_option("--out", out, "configuration CSV")->required();
  raw->add_option("--report", report, "stress history JSON (default: <out>.json)");

  auto* theory = app.add_subcommand("theory-cov", "limiting covariances");
  theory->add_option("--distribution", dist, "distribution JSON (file or inline)")->required();
  theory->add_option("--noise", noise, "noise JSON (file or inline)")->required();
  theory->add_option("--q-n", q_n, "observation probability overriding the model's q");
  theory->add_option("--mc-draws", mc_draws, "Monte Carlo draws for non-mixture distributions")
      ->check(CLI::PositiveNumber);
  theory->add_option("--seed", seed, "seed for the Monte Carlo path");
  theory->add_option("--hetero-i", hetero_i, "row index (heteroscedastic model)");
  theory->add_option("--hetero-n", hetero_n, "sample size (heteroscedastic model)");
  theory->add_option("--out", out, "result JSON (default: stdout)");

  std::optional<std::uint64_t> seed_override;
  auto* mc = app.add_subcommand("mc-run", "Monte Carlo experiment");
  mc->add_option("--config", config, "experiment JSON (file or inline)")->required();
  mc->add_option("--out", out, "report JSON (default: stdout)");
  mc->add_option("--threads", threads, "worker threads (default: MDSCLT_THREADS or all cores)");
  mc->add_option("--seed", seed_override, "overrides the config seed");
  mc->add_option("--dump-dir", dump_dir, "write aligned rows as CSV, one file per n");

  auto* diag = app.add_subcommand("diagnose", "growth, decomposition, scaling and bias diagnostics");
  diag->add_option("--config", config, "experiment JSON (file or inline)")->required();
  diag->add_option("--out", out, "result JSON (default: stdout)");
  diag->add_option("--threads", threads, "worker threads (default: MDSCLT_THREADS or all cores)");
  diag->add_option("--seed", seed_override, "overrides the config seed");

  auto* plot = app.add_subcommand("plot", "SVG figure from a report");
  plot->add_option("--report", report, "report JSON")->required();
  plot->add_option("--kind", kind, "ellipses, scree, bias-trend or bound-ratios")
      ->required()
      ->check(CLI::IsMember({"ellipses", "scree", "bias-trend", "bound-ratios"}));
  plot->add_option("--n", n, "which per_n block (default: largest)");
  plot->add_option("--out", out, "SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) {
      mdsclt_matrix* pts = nullptr;
      mdsclt_matrix* lab = nullptr;
      check(mdsclt_sample_points(json_arg(dist).c_str(), n, seed, &pts, labels_out.empty() ? nullptr : &lab),
            "gen-points");
      MatrixPtr p(pts), l(lab);
      write_csv(out, p.get());
      if (!labels_out.empty()) {
        if (!l) throw Failure{MDSCLT_INVALID_ARGUMENT, "gen-points: the distribution has no class labels"};
        write_csv(labels_out, l.get());
      }
      write_meta(out, "gen-points", seed, "\"n\": " + std::to_string(n));
    } else if (*distmat) {
      const MatrixPtr pts = read_csv(in);
      mdsclt_matrix* dm = nullptr;
      check(mdsclt_distance_matrix(pts.get(), &dm), "distmat");
      const MatrixPtr dptr(dm);
      write_csv(out, dptr.get());
    } else if (*pert) {
      const MatrixPtr dm = read_csv(in);
      mdsclt_matrix* sq = nullptr;
      mdsclt_matrix* del = nullptr;
      check(mdsclt_perturb(dm.get(), json_arg(noise).c_str(), seed, &sq, delta_out.empty() ? nullptr : &del),
            "perturb");
      const MatrixPtr sqp(sq), delp(del);
      if (!delta_out.empty() && !delp)
        throw Failure{MDSCLT_INVALID_ARGUMENT, "perturb: this noise model defines only squared dissimilarities"};
      write_csv(out, sqp.get());
      if (delp) write_csv(delta_out, delp.get());
      write_meta(out, "perturb", seed, "");
    } else if (*emb) {
      const MatrixPtr sq = read_csv(in);
      mdsclt_matrix* x = nullptr;
      char* side = nullptr;
      check(mdsclt_embed(sq.get(), d, allow_deficient ? 1 : 0, &x, &side), "embed");
      const MatrixPtr xp(x);
      const StringPtr sp(side);
      write_csv(out, xp.get());
      write_text(sidecar.empty() ? out + ".json" : sidecar, sp.get());
    } else if (*sel) {
      const MatrixPtr sq = read_csv(in);
      char* res = nullptr;
      check(mdsclt_select_dim(sq.get(), max_d, &res), "select-dim");
      const StringPtr rp(res);
      emit(out, rp.get());
    } else if (*raw) {
      const MatrixPtr del = read_csv(in);
      const std::string opts = "{\"init\": " + quote(init) + ", \"seed\": " + std::to_string(seed) +
                               ", \"max_iter\": " + std::to_string(max_iter) + ", \"tol\": " + CLI::detail::to_string(tol) +
                               "}";
      mdsclt_matrix* x = nullptr;
      char* res = nullptr;
      check(mdsclt_rawstress(del.get(), d, opts.c_str(), &x, &res), "rawstress");
      const MatrixPtr xp(x);
      const StringPtr rp(res);
      write_csv(out, xp.get());
      write_text(report.empty() ? out + ".json" : report, rp.get());
    } else if (*theory) {
      std::string opts = "{\"mc_draws\": " + std::to_string(mc_draws) + ", \"seed\": " + std::to_string(seed);
      if (q_n >= 0.0) opts += ", \"q_n\": " + CLI::detail::to_string(q_n);
      if (hetero_n > 0)
        opts += ", \"hetero\": {\"i\": " + std::to_string(hetero_i) + ", \"n\": " + std::to_string(hetero_n) + "}";
      opts += "}";
      char* res = nullptr;
      check(mdsclt_theory_cov(json_arg(dist).c_str(), json_arg(noise).c_str(), opts.c_str(), &res), "theory-cov");
      const StringPtr rp(res);
      emit(out, rp.get());
    } else if (*mc || *diag) {
      std::string cfg = json_arg(config);
      if (seed_override) cfg = with_fields(cfg, "\"seed\": " + std::to_string(*seed_override));
      if (!dump_dir.empty()) cfg = with_fields(cfg, "\"sample_dump_dir\": " + quote(dump_dir));
      const unsigned t = threads ? threads : default_threads();
      char* res = nullptr;
      if (*mc) check(mdsclt_mc_run(cfg.c_str(), t, &res), "mc-run");
      else check(mdsclt_diagnose(cfg.c_str(), t, &res), "diagnose");
      const StringPtr rp(res);
      emit(out, rp.get());
    } else if (*plot) {
      const std::string text = slurp(report);
      char* svg = nullptr;
      check(mdsclt_plot(text.c_str(), kind.c_str(), n, &svg), "plot");
      const StringPtr sp(svg);
      write_text(out, sp.get());
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    switch (f.status) {
    case MDSCLT_INVALID_ARGUMENT:
    case MDSCLT_IO: return 1;
    default: return 2;
    }
  }
  return 0;
}
