#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rshift/geometry.hpp"

namespace rshift::detail {

// Static uniform-grid index over a point set (counting-sort layout).
class PointIndex {
 public:
  PointIndex(const std::vector<Point>& points, const Window& w, double cell) : points_(points), w_(w) {
    const double side = std::max(cell, 1e-12);
    gx_ = std::clamp(static_cast<int>(w.width() / side), 1, 2048);
    gy_ = std::clamp(static_cast<int>(w.height() / side), 1, 2048);
    cw_ = w.width() / gx_;
    ch_ = w.height() / gy_;
    start_.assign(static_cast<std::size_t>(gx_) * gy_ + 1, 0);
    std::vector<std::size_t> cell_of(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      cell_of[i] = cell_id(points[i]);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    order_.resize(points.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) order_[fill[cell_of[i]]++] = i;
  }

  // Calls f(index, squared_distance) for every point within distance r of p.
  template <class F>
  void for_each_within(const Point& p, double r, F&& f) const {
    const double r2 = r * r;
    const int x0 = cx(p.x() - r), x1 = cx(p.x() + r);
    const int y0 = cy(p.y() - r), y1 = cy(p.y() + r);
    for (int yy = y0; yy <= y1; ++yy) {
      for (int xx = x0; xx <= x1; ++xx) {
        const std::size_t c = static_cast<std::size_t>(yy) * gx_ + xx;
        for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
          const std::size_t i = order_[k];
          const double d2 = (points_[i] - p).squaredNorm();
          if (d2 <= r2) f(i, d2);
        }
      }
    }
  }

  // Distance from p (inside the window) to the nearest indexed point; +inf if empty.
  double nearest_distance(const Point& p) const {
    if (points_.empty()) return std::numeric_limits<double>::infinity();
    const int pcx = cx(p.x());
    const int pcy = cy(p.y());
    double best2 = std::numeric_limits<double>::infinity();
    const double step = std::min(cw_, ch_);
    const int max_ring = std::max(gx_, gy_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int yy = pcy - ring; yy <= pcy + ring; ++yy) {
        if (yy < 0 || yy >= gy_) continue;
        const bool edge_row = (yy == pcy - ring || yy == pcy + ring);
        for (int xx = pcx - ring; xx <= pcx + ring; xx += (edge_row ? 1 : 2 * ring)) {
          if (xx >= 0 && xx < gx_) {
            const std::size_t c = static_cast<std::size_t>(yy) * gx_ + xx;
            for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
              best2 = std::min(best2, (points_[order_[k]] - p).squaredNorm());
            }
          }
          if (ring == 0) break;
        }
      }
      const double reach = ring * step;
      if (best2 <= reach * reach) break;
    }
    return std::sqrt(best2);
  }

 private:
  int cx(double x) const { return std::clamp(static_cast<int>(std::floor((x - w_.x_min()) / cw_)), 0, gx_ - 1); }
  int cy(double y) const { return std::clamp(static_cast<int>(std::floor((y - w_.y_min()) / ch_)), 0, gy_ - 1); }
  std::size_t cell_id(const Point& p) const { return static_cast<std::size_t>(cy(p.y())) * gx_ + cx(p.x()); }

  const std::vector<Point>& points_;
  Window w_;
  int gx_ = 1, gy_ = 1;
  double cw_ = 1.0, ch_ = 1.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

}  // namespace rshift::detail
