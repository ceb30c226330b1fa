#include "doctest.h"

#include "mdsclt/mdsclt.h"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  mdsclt_string_free(s);
  return out;
}

double at(const mdsclt_matrix* m, size_t i, size_t j) { return mdsclt_matrix_data(m)[i * mdsclt_matrix_cols(m) + j]; }

} // namespace

TEST_CASE("matrix handles") {
  const double data[] = {1, 2, 3, 4, 5, 6};
  mdsclt_matrix* m = nullptr;
  REQUIRE(mdsclt_matrix_create(2, 3, data, &m) == MDSCLT_OK);
  CHECK(mdsclt_matrix_rows(m) == 2);
  CHECK(mdsclt_matrix_cols(m) == 3);
  CHECK(at(m, 1, 0) == 4.0);
  mdsclt_matrix_free(m);
  mdsclt_matrix_free(nullptr);
  CHECK(mdsclt_matrix_create(2, 2, nullptr, nullptr) == MDSCLT_INVALID_ARGUMENT);
  CHECK(std::string(mdsclt_last_error()).size() > 0);
  CHECK(std::string(mdsclt_version()).size() > 0);
}

TEST_CASE("sample, distances and embed round trip") {
  mdsclt_matrix *pts = nullptr, *labels = nullptr, *dist = nullptr, *dsq = nullptr, *delta = nullptr, *x = nullptr;
  REQUIRE(mdsclt_sample_points(R"({"three_point_mass": {}})", 50, 4, &pts, &labels) == MDSCLT_OK);
  REQUIRE(labels != nullptr);
  CHECK(mdsclt_matrix_rows(labels) == 50);
  REQUIRE(mdsclt_distance_matrix(pts, &dist) == MDSCLT_OK);
  REQUIRE(mdsclt_perturb(dist, R"({"model": "model3", "q": 1.0})", 0, &dsq, &delta) == MDSCLT_OK);
  char* side = nullptr;
  REQUIRE(mdsclt_embed(dsq, 2, 0, &x, &side) == MDSCLT_OK);
  const json sj = json::parse(take(side));
  CHECK(sj["n"] == 50);
  CHECK(sj["eigenvalues"].size() == 2);
  double worst = 0.0;
  for (size_t i = 0; i < 50; ++i)
    for (size_t j = 0; j < 50; ++j) {
      const double dx = at(x, i, 0) - at(x, j, 0), dy = at(x, i, 1) - at(x, j, 1);
      worst = std::max(worst, std::abs(std::sqrt(dx * dx + dy * dy) - at(dist, i, j)));
    }
  CHECK(worst <= 1e-9);

  char* sel = nullptr;
  REQUIRE(mdsclt_select_dim(dsq, 4, &sel) == MDSCLT_OK);
  CHECK(json::parse(take(sel))["d_hat"] == 2);

  for (auto* m : {pts, labels, dist, dsq, delta, x}) mdsclt_matrix_free(m);
}

TEST_CASE("errors map to status codes") {
  mdsclt_matrix* out = nullptr;
  CHECK(mdsclt_sample_points("{not json", 10, 0, &out, nullptr) == MDSCLT_INVALID_ARGUMENT);
  CHECK(out == nullptr);
  CHECK(mdsclt_matrix_read_csv("/nonexistent/m.csv", &out) == MDSCLT_IO);

  const double ones[] = {1, 1, 1, 1};
  mdsclt_matrix* bad = nullptr;
  REQUIRE(mdsclt_matrix_create(2, 2, ones, &bad) == MDSCLT_OK);
  mdsclt_matrix *dsq = nullptr, *delta = nullptr;
  CHECK(mdsclt_perturb(bad, R"({"model": "model3", "q": 0.5})", 0, &dsq, &delta) == MDSCLT_INVALID_ARGUMENT);
  CHECK(std::string(mdsclt_last_error()).find("hollow") != std::string::npos);
  mdsclt_matrix_free(bad);

  // collinear points: second eigenvalue is zero
  const double line[] = {0, 1, 4, 1, 0, 1, 4, 1, 0};
  mdsclt_matrix* l = nullptr;
  REQUIRE(mdsclt_matrix_create(3, 3, line, &l) == MDSCLT_OK);
  mdsclt_matrix* x = nullptr;
  char* side = nullptr;
  CHECK(mdsclt_embed(l, 2, 0, &x, &side) == MDSCLT_NUMERICAL);
  CHECK(mdsclt_embed(l, 2, 1, &x, &side) == MDSCLT_OK);
  CHECK(json::parse(take(side))["flags"]["deficient"] == true);
  mdsclt_matrix_free(x);
  mdsclt_matrix_free(l);
}

TEST_CASE("theory covariance") {
  char* out = nullptr;
  REQUIRE(mdsclt_theory_cov(R"({"gaussian": {"mean": [0, 0], "covariance": [[1, 0], [0, 1]]}})",
                            R"({"model": "model1", "law": {"gaussian": {"sigma": 2}}})", nullptr, &out) == MDSCLT_OK);
  const json j = json::parse(take(out));
  CHECK(j["per_class"][0]["sigma"][0][0].get<double>() == doctest::Approx(1.0));
  CHECK(j["per_class"][0]["sigma"][0][1].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("rawstress through the C API") {
  mdsclt_matrix *pts = nullptr, *dist = nullptr, *x = nullptr;
  REQUIRE(mdsclt_sample_points(R"({"uniform_box": {"lo": [0, 0], "hi": [1, 1]}})", 20, 1, &pts, nullptr) == MDSCLT_OK);
  REQUIRE(mdsclt_distance_matrix(pts, &dist) == MDSCLT_OK);
  char* res = nullptr;
  REQUIRE(mdsclt_rawstress(dist, 2, R"({"init": "random", "seed": 3, "max_iter": 2000})", &x, &res) == MDSCLT_OK);
  const json j = json::parse(take(res));
  CHECK(j["increases"] == 0);
  CHECK(j["stress"].get<double>() < 1e-6);
  for (auto* m : {pts, dist, x}) mdsclt_matrix_free(m);
}

TEST_CASE("mc run and plots") {
  const char* cfg = R"({"distribution": {"three_point_mass": {}},
    "noise": {"model": "model2", "law": {"uniform": {"a": 4.0}}},
    "n_list": [40, 80], "d": 2, "replicates": 3, "seed": 1})";
  char* rep = nullptr;
  REQUIRE(mdsclt_mc_run(cfg, 1, &rep) == MDSCLT_OK);
  const std::string report = take(rep);
  const json j = json::parse(report);
  CHECK(j["per_n"].size() == 2);
  CHECK(j.contains("config"));

  char* svg = nullptr;
  REQUIRE(mdsclt_plot(report.c_str(), "ellipses", 80, &svg) == MDSCLT_OK);
  const std::string s1 = take(svg);
  auto count = [&](const std::string& needle) {
    size_t c = 0;
    for (size_t p = s1.find(needle); p != std::string::npos; p = s1.find(needle, p + 1)) ++c;
    return c;
  };
  CHECK(count("class=\"ellipse-empirical\"") == 3);
  CHECK(count("class=\"ellipse-theoretical\"") == 3);
  CHECK(count("class=\"mean-empirical\"") == 3);
  REQUIRE(mdsclt_plot(report.c_str(), "ellipses", 80, &svg) == MDSCLT_OK);
  CHECK(take(svg) == s1);

  REQUIRE(mdsclt_plot(report.c_str(), "scree", 0, &svg) == MDSCLT_OK);
  CHECK(take(svg).find("<svg") != std::string::npos);
  CHECK(mdsclt_plot(report.c_str(), "bound-ratios", 0, &svg) == MDSCLT_INVALID_ARGUMENT);
  CHECK(std::string(mdsclt_last_error()).find("bounds") != std::string::npos);
  CHECK(mdsclt_plot(report.c_str(), "pie", 0, &svg) == MDSCLT_INVALID_ARGUMENT);
}

TEST_CASE("diagnose") {
  const char* cfg = R"({"distribution": {"three_point_mass": {}},
    "noise": {"model": "model2", "law": {"uniform": {"a": 4.0}}},
    "n_list": [40, 80, 160], "d": 2, "replicates": 2, "seed": 1})";
  char* out = nullptr;
  REQUIRE(mdsclt_diagnose(cfg, 1, &out) == MDSCLT_OK);
  const json j = json::parse(take(out));
  CHECK(j.contains("growth"));
  CHECK(j.contains("bounds"));
  char* svg = nullptr;
  const std::string text = j.dump();
  CHECK(mdsclt_plot(text.c_str(), "bound-ratios", 0, &svg) == MDSCLT_OK);
  mdsclt_string_free(svg);
}
