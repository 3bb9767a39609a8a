#include "rshift/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace rshift {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  s += fmt::format(R"(<rect x="{:.1f}" y="{:.1f}" width="{:.1f}" height="{:.1f}" fill="none" stroke="#333"/>)",
                   f.left, f.top, f.width, f.height);
  s += "\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="middle">{:.3g}</text>)", f.px(x),
                     f.top + f.height + 15, x);
    s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="11" text-anchor="end">{:.3g}</text>)", f.left - 5,
                     f.py(y) + 4, y);
    s += "\n";
  }
  s += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle">{}</text>)",
                   f.left + f.width / 2, f.top + f.height + 32, escape(xlabel));
  s += fmt::format(
      R"svg(<text x="{:.1f}" y="{:.1f}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1f} {:.1f})">{}</text>)svg",
      f.left - 42, f.top + f.height / 2, f.left - 42, f.top + f.height / 2, escape(ylabel));
  return s + "\n";
}

std::string header(int w, int h) {
  return fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)", w, h,
                     w, h) +
         "\n" + fmt::format(R"(<rect width="{}" height="{}" fill="white"/>)", w, h) + "\n";
}

}  // namespace

std::string envelope_svg(const TestResult& result, double alpha) {
  if (!result.envelope) throw ParameterError("result has no envelope (scalar statistic)");
  const Envelope& e = *result.envelope;
  const Eigen::Index k = e.r.size();
  if (k == 0 || e.lo.size() != k || e.hi.size() != k || e.observed.size() != k) {
    throw ParameterError("envelope arrays have inconsistent lengths");
  }
  double lo = std::min(e.lo.minCoeff(), e.observed.minCoeff());
  double hi = std::max(e.hi.maxCoeff(), e.observed.maxCoeff());
  if (hi == lo) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  const Frame f{70, 40, 540, 320, 0.0, e.r.maxCoeff(), lo - pad, hi + pad};

  std::string s = header(640, 420);
  s += fmt::format(R"(<text x="320" y="22" font-size="14" text-anchor="middle">{} global envelope test, p = {:.4g}</text>)",
                   escape(result.method), result.p_value);
  s += "\n";
  std::string band;
  for (Eigen::Index j = 0; j < k; ++j) band += fmt::format("{:.2f},{:.2f} ", f.px(e.r(j)), f.py(e.hi(j)));
  for (Eigen::Index j = k - 1; j >= 0; --j) band += fmt::format("{:.2f},{:.2f} ", f.px(e.r(j)), f.py(e.lo(j)));
  s += fmt::format(R"(<polygon points="{}" fill="#c8c8c8" stroke="none"/>)", band) + "\n";
  std::string line;
  for (Eigen::Index j = 0; j < k; ++j) line += fmt::format("{:.2f},{:.2f} ", f.px(e.r(j)), f.py(e.observed(j)));
  s += fmt::format(R"(<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>)", line) + "\n";
  s += axes(f, "r", e.standardized ? "standardized statistic" : "statistic");
  s += fmt::format(R"(<text x="600" y="60" font-size="11" text-anchor="end">grey: {:.0f}% global envelope; black: observed</text>)",
                   100.0 * (1.0 - alpha));
  s += "\n</svg>\n";
  return s;
}

std::string pvalue_histogram_svg(const std::vector<std::pair<std::string, std::vector<double>>>& samples, int bins) {
  if (samples.empty()) throw ParameterError("histogram needs at least one sample");
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  const int panel_w = 300;
  const int width = 40 + panel_w * static_cast<int>(samples.size());
  std::vector<std::vector<double>> density;
  double top = 1.0;
  for (const auto& [name, p] : samples) {
    std::vector<double> d(static_cast<std::size_t>(bins), 0.0);
    std::size_t n = 0;
    for (double v : p) {
      if (std::isnan(v)) continue;
      const int b = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
      d[static_cast<std::size_t>(b)] += 1.0;
      ++n;
    }
    for (auto& x : d) x = n ? x * bins / static_cast<double>(n) : 0.0;
    top = std::max(top, *std::max_element(d.begin(), d.end()));
    density.push_back(std::move(d));
  }
  std::string s = header(width, 300);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Frame f{60.0 + panel_w * static_cast<double>(i), 30, panel_w - 70.0, 220, 0.0, 1.0, 0.0, top * 1.05};
    s += fmt::format(R"(<text x="{:.1f}" y="20" font-size="13" text-anchor="middle">{}</text>)", f.left + f.width / 2,
                     escape(samples[i].first));
    s += "\n";
    for (int b = 0; b < bins; ++b) {
      const double x0 = f.px(static_cast<double>(b) / bins);
      const double x1 = f.px(static_cast<double>(b + 1) / bins);
      const double y = f.py(density[i][static_cast<std::size_t>(b)]);
      s += fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="#7a9cc6" stroke="white"/>)",
                       x0, y, x1 - x0, f.py(0.0) - y);
      s += "\n";
    }
    s += fmt::format(R"(<line x1="{:.1f}" y1="{:.1f}" x2="{:.1f}" y2="{:.1f}" stroke="#b22" stroke-dasharray="4 3"/>)",
                     f.px(0.0), f.py(1.0), f.px(1.0), f.py(1.0));
    s += "\n" + axes(f, "p-value", "density");
  }
  s += "</svg>\n";
  return s;
}

}  // namespace rshift
