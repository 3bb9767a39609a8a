#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>

#include "rshift/random.hpp"

namespace rshift {

using Point = Eigen::Vector2d;

/// Axis-aligned rectangular observation window [x_min, x_max] x [y_min, y_max].
class Window {
 public:
  Window() = default;
  Window(double x_min, double y_min, double x_max, double y_max);

  static Window unit_square() { return {}; }

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  double min_side() const { return width() < height() ? width() : height(); }
  double diameter() const;
  Point lower() const { return {x_min_, y_min_}; }
  Point upper() const { return {x_max_, y_max_}; }
  Point center() const { return {0.5 * (x_min_ + x_max_), 0.5 * (y_min_ + y_max_)}; }

  bool contains(const Point& p) const {
    return p.x() >= x_min_ && p.x() <= x_max_ && p.y() >= y_min_ && p.y() <= y_max_;
  }
  /// Distance from an interior point to the window boundary.
  double boundary_distance(const Point& p) const;
  Window translated(const Eigen::Vector2d& v) const;

  bool operator==(const Window&) const = default;

 private:
  double x_min_ = 0.0;
  double y_min_ = 0.0;
  double x_max_ = 1.0;
  double y_max_ = 1.0;
};

/// Translation applied to one component. Only the zero shift v0 carries the origin flag.
struct ShiftVector {
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  bool origin = false;

  static ShiftVector zero() { return {Eigen::Vector2d::Zero(), true}; }
  double dx() const { return offset.x(); }
  double dy() const { return offset.y(); }
  ShiftVector operator-() const { return {-offset, origin}; }
};

/// W_i = W ∩ (W + v_i) together with its area.
struct ShiftedDomain {
  Window base;
  ShiftVector shift;
  Window intersection;
  double area = 0.0;
};

ShiftVector draw_shift_disk(Rng& rng, double radius);
ShiftVector draw_shift_rect(Rng& rng, double half_width);
ShiftVector draw_shift_rect(Rng& rng, double half_width_x, double half_width_y);

/// Maps p into [x_min, x_max) x [y_min, y_max) by periodic identification of opposite edges.
Point torus_wrap(const Point& p, const Window& w);

/// Location of p after shifting by v on the torus defined by w.
inline Point torus_shift(const Point& p, const ShiftVector& v, const Window& w) {
  return torus_wrap(p + v.offset, w);
}

/// Centered erosion of w by the given margins.
Window erode(const Window& w, double margin_x, double margin_y);

ShiftedDomain intersect_shifted(const Window& w, const ShiftVector& v,
                                std::optional<std::size_t> shift_index = {});

/// Exact rectangle set covariance |W ∩ (W + v)|.
double set_covariance(const Window& w, const Eigen::Vector2d& v);

/// Isotropized set covariance: mean of |W ∩ (W + t u)| over unit directions u.
double set_covariance_gamma(const Window& w, double t);

/// Γ_W(r) = ∫_W ∫_W 1(|x - y| <= r) dx dy.
double big_gamma(const Window& w, double r);

/// Ohser edge-correction factor πr² / Γ_W(r).
double edge_factor_c(const Window& w, double r);

}  // namespace rshift
