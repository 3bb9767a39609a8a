#include "rshift/geometry.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "rshift/error.hpp"

namespace rshift {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Γ for r no larger than the shorter side, where the rectangle formula is exact.
double big_gamma_small_r(double a, double b, double r) {
  const double r2 = r * r;
  return std::numbers::pi * a * b * r2 - (4.0 / 3.0) * (a + b) * r2 * r + 0.5 * r2 * r2;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

Window::Window(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw GeometryError("window must have positive width and height");
  }
}

double Window::diameter() const { return std::hypot(width(), height()); }

double Window::boundary_distance(const Point& p) const {
  return std::min(std::min(p.x() - x_min_, x_max_ - p.x()), std::min(p.y() - y_min_, y_max_ - p.y()));
}

Window Window::translated(const Eigen::Vector2d& v) const {
  return {x_min_ + v.x(), y_min_ + v.y(), x_max_ + v.x(), y_max_ + v.y()};
}

ShiftVector draw_shift_disk(Rng& rng, double radius) {
  if (!(radius > 0.0)) throw ParameterError("shift disk radius must be positive");
  double x = 0.0;
  double y = 0.0;
  uniform_unit_disk(rng, x, y);
  return {Eigen::Vector2d(radius * x, radius * y), false};
}

ShiftVector draw_shift_rect(Rng& rng, double half_width) {
  return draw_shift_rect(rng, half_width, half_width);
}

ShiftVector draw_shift_rect(Rng& rng, double half_width_x, double half_width_y) {
  if (!(half_width_x > 0.0) || !(half_width_y > 0.0)) {
    throw ParameterError("shift rectangle half-width must be positive");
  }
  const double dx = uniform(rng, -half_width_x, half_width_x);
  const double dy = uniform(rng, -half_width_y, half_width_y);
  return {Eigen::Vector2d(dx, dy), false};
}

Point torus_wrap(const Point& p, const Window& w) {
  auto wrap = [](double x, double lo, double side) {
    double t = std::fmod(x - lo, side);
    if (t < 0.0) t += side;
    if (t >= side) t = 0.0;
    return lo + t;
  };
  return {wrap(p.x(), w.x_min(), w.width()), wrap(p.y(), w.y_min(), w.height())};
}

Window erode(const Window& w, double margin_x, double margin_y) {
  if (margin_x < 0.0 || margin_y < 0.0) throw ParameterError("erosion margins must be non-negative");
  if (2.0 * margin_x >= w.width() || 2.0 * margin_y >= w.height()) {
    throw GeometryError("erosion margins leave an empty window");
  }
  return {w.x_min() + margin_x, w.y_min() + margin_y, w.x_max() - margin_x, w.y_max() - margin_y};
}

ShiftedDomain intersect_shifted(const Window& w, const ShiftVector& v,
                                std::optional<std::size_t> shift_index) {
  const double wx = w.width() - std::abs(v.dx());
  const double wy = w.height() - std::abs(v.dy());
  if (!(wx > 0.0) || !(wy > 0.0)) {
    std::string msg = "shifted window does not overlap the original";
    if (shift_index) msg += " (shift " + std::to_string(*shift_index) + ")";
    throw GeometryError(msg, shift_index);
  }
  const Window moved = w.translated(v.offset);
  Window inter(std::max(w.x_min(), moved.x_min()), std::max(w.y_min(), moved.y_min()),
               std::min(w.x_max(), moved.x_max()), std::min(w.y_max(), moved.y_max()));
  return {w, v, inter, wx * wy};
}

double set_covariance(const Window& w, const Eigen::Vector2d& v) {
  return positive_part(w.width() - std::abs(v.x())) * positive_part(w.height() - std::abs(v.y()));
}

double set_covariance_gamma(const Window& w, double t) {
  if (t <= 0.0) return w.area();
  if (t >= w.diameter()) return 0.0;
  const double a = w.width();
  const double b = w.height();
  // Rectangle symmetry reduces the circle average to the first quadrant, where
  // (a - t cos θ)(b - t sin θ) is positive exactly on [θ0, θ1].
  const double th0 = t > a ? std::acos(a / t) : 0.0;
  const double th1 = t > b ? std::asin(b / t) : 0.5 * std::numbers::pi;
  if (th1 <= th0) return 0.0;
  const auto antiderivative = [&](double th) {
    const double s = std::sin(th);
    return a * b * th + a * t * std::cos(th) - b * t * s + 0.5 * t * t * s * s;
  };
  return positive_part((antiderivative(th1) - antiderivative(th0)) / (0.5 * std::numbers::pi));
}

double big_gamma(const Window& w, double r) {
  if (r <= 0.0) return 0.0;
  const double a = w.width();
  const double b = w.height();
  const double m = w.min_side();
  if (r <= m) return big_gamma_small_r(a, b, r);
  const double total = w.area() * w.area();
  const std::function<double(double)> integrand = [&](double t) {
    return 2.0 * std::numbers::pi * t * set_covariance_gamma(w, t);
  };
  // γ̄ has kinks at the two side lengths; integrate each smooth piece separately.
  const double breaks[] = {m, std::max(a, b), w.diameter()};
  double value = big_gamma_small_r(a, b, m);
  for (int k = 0; k + 1 < 3; ++k) {
    const double lo = breaks[k];
    if (r <= lo) break;
    const double hi = std::min(r, breaks[k + 1]);
    if (hi <= lo) continue;
    const double fa = integrand(lo);
    const double fb = integrand(hi);
    const double fm = integrand(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    value += adaptive_simpson(integrand, lo, hi, fa, fm, fb, whole, 1e-12 * total, 40);
  }
  return std::min(value, total);
}

double edge_factor_c(const Window& w, double r) {
  if (!(r > 0.0)) throw ParameterError("edge factor c(r) is undefined for r <= 0");
  return std::numbers::pi * r * r / big_gamma(w, r);
}

}  // namespace rshift
