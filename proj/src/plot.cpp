#include "plot.hpp"

#include "mdsclt/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace mdsclt::plot {

using json_io::json;

namespace {

constexpr double kWidth = 640, kHeight = 480, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  if (v == 0.0) v = 0.0; // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

[[noreturn]] void missing(const std::string& msg) { throw ValidationError("plot: " + msg); }

struct Frame {
  double x0, x1, y0, y1;
  bool logx = false;

  void pad(double frac) {
    if (x1 <= x0) x0 -= 1, x1 += 1;
    if (y1 <= y0) y0 -= 1, y1 += 1;
    const double dx = (x1 - x0) * frac, dy = (y1 - y0) * frac;
    if (!logx) x0 -= dx, x1 += dx;
    y0 -= dy;
    y1 += dy;
  }
  double fx(double x) const {
    const double a = logx ? std::log10(x0) : x0, b = logx ? std::log10(x1) : x1;
    const double t = ((logx ? std::log10(x) : x) - a) / (b - a);
    return kLeft + t * (kWidth - kLeft - kRight);
  }
  double fy(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

class Svg {
public:
  explicit Svg(const std::string& title) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kWidth / 2, 22, title, "middle", "title");
  }
  void text(double x, double y, const std::string& s, const char* anchor = "start", const char* cls = "label") {
    out_ += "<text class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" +
            anchor + "\">" + escape(s) + "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, const char* cls, const char* dash = "") {
    out_ += "<line class=\"" + std::string(cls) + "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
            "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\"";
    if (*dash) out_ += std::string(" stroke-dasharray=\"") + dash + "\"";
    out_ += "/>\n";
  }
  void path(const std::vector<std::pair<double, double>>& pts, bool closed, const char* stroke, const char* cls,
            const char* dash = "") {
    std::string d;
    for (size_t i = 0; i < pts.size(); ++i) d += (i ? " L" : "M") + num(pts[i].first) + " " + num(pts[i].second);
    if (closed) d += " Z";
    out_ += "<path class=\"" + std::string(cls) + "\" d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke +
            "\" stroke-width=\"1.5\"";
    if (*dash) out_ += std::string(" stroke-dasharray=\"") + dash + "\"";
    out_ += "/>\n";
  }
  void circle(double x, double y, double r, const char* fill, const char* cls) {
    out_ += "<circle class=\"" + std::string(cls) + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) +
            "\" fill=\"" + fill + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill, const char* cls) {
    out_ += "<rect class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
            "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    const double bx = kHeight - kBottom, lx = kLeft, rx = kWidth - kRight;
    line(lx, bx, rx, bx, "black", "axis");
    line(lx, kTop, lx, bx, "black", "axis");
    for (int t = 0; t <= 4; ++t) {
      const double yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
      line(lx - 4, f.fy(yv), lx, f.fy(yv), "black", "tick");
      text(lx - 6, f.fy(yv) + 4, num(yv), "end", "tick-label");
      double xv;
      if (f.logx) xv = std::pow(10.0, std::log10(f.x0) + (std::log10(f.x1) - std::log10(f.x0)) * t / 4.0);
      else xv = f.x0 + (f.x1 - f.x0) * t / 4.0;
      line(f.fx(xv), bx, f.fx(xv), bx + 4, "black", "tick");
      text(f.fx(xv), bx + 18, num(xv), "middle", "tick-label");
    }
    text((lx + rx) / 2, kHeight - 18, xlabel, "middle", "axis-label");
    out_ += "<text class=\"axis-label\" x=\"16\" y=\"" + num((kTop + bx) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
            num((kTop + bx) / 2) + ")\">" + escape(ylabel) + "</text>\n";
  }
  std::string finish() { return out_ + "</svg>\n"; }

private:
  std::string out_;
};

const json& pick_n(const json& doc, std::optional<Index> n) {
  if (!doc.contains("per_n") || !doc["per_n"].is_array() || doc["per_n"].empty())
    missing("report has no per_n blocks (not an mc-run report?)");
  const json& all = doc["per_n"];
  if (!n) return all.back();
  for (const auto& b : all)
    if (b.value("n", Index{-1}) == *n) return b;
  missing("report has no block for n=" + std::to_string(*n));
}

std::string model_tag(const json& doc) { return doc.value("model", std::string("unknown model")); }

std::string ellipses(const json& doc, std::optional<Index> want) {
  const json& block = pick_n(doc, want);
  const json& classes = block.value("per_class", json::array());
  if (classes.empty()) missing("per_class is empty at n=" + std::to_string(block.value("n", 0)));
  if (!doc.value("checks", json::object()).value("clt", false))
    missing("report lacks theoretical covariances; rerun with checks.clt enabled");
  const Index n = block.at("n").get<Index>();
  const double nn = static_cast<double>(n);

  struct Item {
    Vector mean, target;
    Matrix emp, theo;
    bool has_emp = false, has_theo = false;
  };
  std::vector<Item> items;
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto grow = [&](double x, double y) {
    f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x), f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
  };
  for (const auto& c : classes) {
    Item it;
    it.mean = json_io::vector_from(c.at("empirical_mean"), "empirical_mean");
    it.target = json_io::vector_from(c.at("target"), "target");
    if (it.mean.size() != 2) missing("ellipses need d = 2");
    if (!c.contains("theoretical_cov")) missing("class without theoretical_cov; rerun with checks.clt enabled");
    it.emp = json_io::matrix_from(c.at("empirical_cov"), "empirical_cov") / nn;
    it.theo = json_io::matrix_from(c.at("theoretical_cov"), "theoretical_cov") / nn;
    grow(it.mean(0), it.mean(1));
    grow(it.target(0), it.target(1));
    for (const Matrix* m : {&it.emp, &it.theo}) {
      try {
        const Matrix pts = ellipse_points(m == &it.emp ? it.mean : it.target, *m, 0.95);
        for (Index i = 0; i < pts.rows(); ++i) grow(pts(i, 0), pts(i, 1));
        (m == &it.emp ? it.has_emp : it.has_theo) = true;
      } catch (const ValidationError&) {
        // degenerate covariance, e.g. noiseless input: no curve drawn
      }
    }
    items.push_back(std::move(it));
  }
  f.pad(0.08);
  // equal aspect
  const double sx = (f.x1 - f.x0) / (kWidth - kLeft - kRight), sy = (f.y1 - f.y0) / (kHeight - kTop - kBottom);
  if (sx > sy) {
    const double mid = 0.5 * (f.y0 + f.y1), half = 0.5 * sx * (kHeight - kTop - kBottom);
    f.y0 = mid - half, f.y1 = mid + half;
  } else {
    const double mid = 0.5 * (f.x0 + f.x1), half = 0.5 * sy * (kWidth - kLeft - kRight);
    f.x0 = mid - half, f.x1 = mid + half;
  }

  Svg svg("95% level curves, n = " + std::to_string(n) + ", " + model_tag(doc));
  svg.axes(f, "coordinate 1", "coordinate 2");
  for (size_t k = 0; k < items.size(); ++k) {
    const auto& it = items[k];
    const char* colour = kPalette[k % kPalette.size()];
    auto draw = [&](const Vector& c, const Matrix& cov, const char* cls, const char* dash) {
      const Matrix pts = ellipse_points(c, cov, 0.95);
      std::vector<std::pair<double, double>> px;
      for (Index i = 0; i < pts.rows(); ++i) px.emplace_back(f.fx(pts(i, 0)), f.fy(pts(i, 1)));
      svg.path(px, true, colour, cls, dash);
    };
    if (it.has_emp) draw(it.mean, it.emp, "ellipse-empirical", "");
    if (it.has_theo) draw(it.target, it.theo, "ellipse-theoretical", "6 4");
    svg.circle(f.fx(it.mean(0)), f.fy(it.mean(1)), 4, colour, "mean-empirical");
    const double tx = f.fx(it.target(0)), ty = f.fy(it.target(1));
    svg.path({{tx - 5, ty - 5}, {tx + 5, ty + 5}}, false, "black", "mean-target");
    svg.path({{tx - 5, ty + 5}, {tx + 5, ty - 5}}, false, "black", "mean-target");
  }
  svg.text(kWidth - kRight, kTop + 4, "solid: empirical, dashed: theory, x: target", "end", "legend");
  return svg.finish();
}

std::string scree(const json& doc, std::optional<Index> want) {
  Vector ev;
  std::optional<double> threshold;
  std::string subtitle;
  if (doc.contains("per_n")) {
    const json& block = pick_n(doc, want);
    ev = json_io::vector_from(block.value("scree", json::array()), "scree");
    if (block.contains("scree_threshold")) threshold = block["scree_threshold"].get<double>();
    subtitle = "n = " + std::to_string(block.value("n", 0)) + ", " + model_tag(doc);
  } else if (doc.contains("all_top_eigenvalues")) {
    ev = json_io::vector_from(doc["all_top_eigenvalues"], "all_top_eigenvalues");
    if (doc.contains("n")) {
      const auto n = doc["n"].get<Index>();
      threshold = std::pow(static_cast<double>(n), 2.0 / 3.0);
      subtitle = "n = " + std::to_string(n);
    }
  } else if (doc.contains("eigenvalues")) {
    ev = json_io::vector_from(doc["eigenvalues"], "eigenvalues");
  }
  if (ev.size() == 0) missing("no eigenvalues to plot (report or embedding sidecar without scree data)");

  Frame f{0.5, static_cast<double>(ev.size()) + 0.5, std::min(0.0, ev.minCoeff()), ev.maxCoeff()};
  if (threshold) f.y1 = std::max(f.y1, *threshold);
  f.y1 += 0.05 * (f.y1 - f.y0);
  if (f.y1 <= f.y0) f.y1 = f.y0 + 1;
  Svg svg("scree" + (subtitle.empty() ? std::string() : ", " + subtitle));
  svg.axes(f, "index", "eigenvalue of B");
  const double w = 0.6 * (f.fx(1.0) - f.fx(0.0));
  for (Index k = 0; k < ev.size(); ++k) {
    const double x = f.fx(static_cast<double>(k + 1));
    const double top = f.fy(std::max(0.0, ev(k))), base = f.fy(std::min(0.0, ev(k)));
    svg.rect(x - w / 2, top, w, base - top, kPalette[0], "bar");
  }
  if (threshold) {
    svg.line(kLeft, f.fy(*threshold), kWidth - kRight, f.fy(*threshold), "#d62728", "threshold", "6 4");
    svg.text(kWidth - kRight, f.fy(*threshold) - 4, "n^(2/3)", "end", "legend");
  }
  return svg.finish();
}

std::string series_plot(const std::string& title, const std::string& ylabel, const std::vector<double>& xs,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (xs.empty()) missing("nothing to plot");
  Frame f{xs.front(), xs.back(), std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  f.logx = xs.front() > 0.0 && xs.size() > 1;
  for (const auto& s : series)
    for (double v : s.second)
      if (std::isfinite(v)) f.y0 = std::min(f.y0, v), f.y1 = std::max(f.y1, v);
  if (!std::isfinite(f.y0)) f.y0 = 0, f.y1 = 1;
  f.y0 = std::min(f.y0, 0.0);
  if (xs.size() == 1) f.x0 *= 0.5, f.x1 *= 2.0;
  f.pad(0.05);
  Svg svg(title);
  svg.axes(f, "n", ylabel);
  for (size_t k = 0; k < series.size(); ++k) {
    const char* colour = kPalette[k % kPalette.size()];
    std::vector<std::pair<double, double>> px;
    for (size_t i = 0; i < xs.size() && i < series[k].second.size(); ++i)
      if (std::isfinite(series[k].second[i])) px.emplace_back(f.fx(xs[i]), f.fy(series[k].second[i]));
    svg.path(px, false, colour, "series");
    for (const auto& p : px) svg.circle(p.first, p.second, 3, colour, "point");
    svg.text(kWidth - kRight, kTop + 14.0 * static_cast<double>(k + 1), series[k].first, "end", "legend");
  }
  return svg.finish();
}

std::string bias_trend(const json& doc) {
  std::vector<double> xs;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  const json* rows = doc.contains("rows") ? &doc["rows"]
                     : doc.contains("hetero_bias") ? &doc["hetero_bias"]["rows"]
                                                   : nullptr;
  if (rows) { // bias experiment output
    for (const auto& row : *rows) {
      xs.push_back(row.at("n").get<double>());
      const auto b = row.at("bias").get<std::vector<double>>();
      if (series.empty())
        for (size_t k = 0; k < b.size(); ++k) series.push_back({"class " + std::to_string(k + 1), {}});
      for (size_t k = 0; k < b.size() && k < series.size(); ++k) series[k].second.push_back(b[k]);
    }
  } else {
    if (!doc.value("checks", json::object()).value("hetero_bias", false))
      missing("report has no bias section; rerun with checks.hetero_bias enabled");
    for (const auto& block : doc.at("per_n")) {
      xs.push_back(block.at("n").get<double>());
      const auto& classes = block.at("per_class");
      if (series.empty())
        for (size_t k = 0; k < classes.size(); ++k) series.push_back({"class " + std::to_string(k + 1), {}});
      for (size_t k = 0; k < classes.size() && k < series.size(); ++k)
        series[k].second.push_back(classes[k].at("bias").get<double>());
    }
  }
  if (xs.empty()) missing("bias section is empty");
  return series_plot("class-mean bias, " + model_tag(doc), "|empirical mean - target|", xs, series);
}

std::string bound_ratios(const json& doc) {
  const json* bounds = nullptr;
  if (doc.contains("bounds")) bounds = &doc["bounds"];
  else if (doc.contains("medians")) bounds = &doc;
  if (!bounds) missing("report has no bounds section; rerun with checks.bounds enabled");
  std::vector<double> xs;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const char* name : kBoundRatioNames) series.push_back({name, {}});
  for (const auto& row : bounds->at("medians")) {
    xs.push_back(row.at("n").get<double>());
    for (auto& s : series) {
      const json& v = row.at(s.first);
      s.second.push_back(v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return series_plot("median bound ratios, " + model_tag(doc), "quantity / claimed rate", xs, series);
}

} // namespace

std::string render_svg(const json& doc, const std::string& kind, std::optional<Index> n) {
  if (!doc.is_object()) missing("input is not a JSON object");
  try {
    if (kind == "ellipses") return ellipses(doc, n);
    if (kind == "scree") return scree(doc, n);
    if (kind == "bias-trend") return bias_trend(doc);
    if (kind == "bound-ratios") return bound_ratios(doc);
  } catch (const json::exception& e) {
    missing(std::string("malformed report: ") + e.what());
  }
  missing("unknown kind '" + kind + "' (ellipses, scree, bias-trend, bound-ratios)");
}

} // namespace mdsclt::plot
