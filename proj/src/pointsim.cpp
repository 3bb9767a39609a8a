#include "rshift/pointsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rshift/error.hpp"

namespace rshift {

namespace {

// Uniform cell grid over a window supporting insertion, removal and
// counting of points within a fixed interaction radius.
class DynamicGrid {
 public:
  DynamicGrid(const Window& w, double radius) : w_(w), radius2_(radius * radius) {
    gx_ = std::max(1, static_cast<int>(w.width() / radius));
    gy_ = std::max(1, static_cast<int>(w.height() / radius));
    gx_ = std::min(gx_, 1024);
    gy_ = std::min(gy_, 1024);
    cw_ = w.width() / gx_;
    ch_ = w.height() / gy_;
    cells_.resize(static_cast<std::size_t>(gx_) * gy_);
  }

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

  int count_close(const Point& p, std::ptrdiff_t exclude) const {
    const auto [cx, cy] = cell_xy(p);
    int count = 0;
    for (int yy = std::max(0, cy - 1); yy <= std::min(gy_ - 1, cy + 1); ++yy) {
      for (int xx = std::max(0, cx - 1); xx <= std::min(gx_ - 1, cx + 1); ++xx) {
        for (int idx : cells_[static_cast<std::size_t>(yy) * gx_ + xx]) {
          if (idx == exclude) continue;
          if ((points_[idx] - p).squaredNorm() <= radius2_) ++count;
        }
      }
    }
    return count;
  }

  void add(const Point& p) {
    const int idx = static_cast<int>(points_.size());
    points_.push_back(p);
    const std::size_t c = cell_id(p);
    cell_of_.push_back(c);
    cells_[c].push_back(idx);
  }

  void remove(std::size_t i) {
    erase_from_cell(cell_of_[i], static_cast<int>(i));
    const std::size_t last = points_.size() - 1;
    if (i != last) {
      points_[i] = points_[last];
      cell_of_[i] = cell_of_[last];
      auto& lst = cells_[cell_of_[i]];
      std::replace(lst.begin(), lst.end(), static_cast<int>(last), static_cast<int>(i));
    }
    points_.pop_back();
    cell_of_.pop_back();
  }

  void move(std::size_t i, const Point& p) {
    erase_from_cell(cell_of_[i], static_cast<int>(i));
    points_[i] = p;
    cell_of_[i] = cell_id(p);
    cells_[cell_of_[i]].push_back(static_cast<int>(i));
  }

 private:
  std::pair<int, int> cell_xy(const Point& p) const {
    const int cx = std::clamp(static_cast<int>((p.x() - w_.x_min()) / cw_), 0, gx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y() - w_.y_min()) / ch_), 0, gy_ - 1);
    return {cx, cy};
  }
  std::size_t cell_id(const Point& p) const {
    const auto [cx, cy] = cell_xy(p);
    return static_cast<std::size_t>(cy) * gx_ + cx;
  }
  void erase_from_cell(std::size_t c, int idx) {
    auto& lst = cells_[c];
    auto it = std::find(lst.begin(), lst.end(), idx);
    *it = lst.back();
    lst.pop_back();
  }

  Window w_;
  double radius2_;
  int gx_ = 1, gy_ = 1;
  double cw_ = 1.0, ch_ = 1.0;
  std::vector<Point> points_;
  std::vector<std::size_t> cell_of_;
  std::vector<std::vector<int>> cells_;
};

Point uniform_in(const Window& w, Rng& rng) {
  const double x = uniform(rng, w.x_min(), w.x_max());
  const double y = uniform(rng, w.y_min(), w.y_max());
  return {x, y};
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

// γ^t with γ^0 = 1 also for γ = 0.
double interaction(double gamma, int t) { return t == 0 ? 1.0 : std::pow(gamma, t); }

// Cumulative cell intensities for inverse-CDF placement of Cox points.
struct CellMeasure {
  std::vector<double> cumulative;
  double total = 0.0;
};

CellMeasure cell_measure(const FieldRaster& log_intensity, double mu) {
  const double cell_area = log_intensity.cell_width() * log_intensity.cell_height();
  const Eigen::MatrixXd& v = log_intensity.values();
  CellMeasure m;
  m.cumulative.resize(static_cast<std::size_t>(v.size()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    acc += std::exp(mu + v.data()[k]) * cell_area;
    m.cumulative[static_cast<std::size_t>(k)] = acc;
  }
  m.total = acc;
  return m;
}

PointPattern place_cox_points(const FieldRaster& raster, const CellMeasure& m, Rng& rng) {
  PointPattern out;
  out.window = raster.window();
  std::poisson_distribution<long> count_dist(m.total);
  const long n = m.total > 0.0 ? count_dist(rng) : 0;
  out.points.reserve(static_cast<std::size_t>(n));
  const int nx = raster.nx();
  for (long k = 0; k < n; ++k) {
    const double target = uniform01(rng) * m.total;
    auto it = std::upper_bound(m.cumulative.begin(), m.cumulative.end(), target);
    std::size_t cell = static_cast<std::size_t>(it - m.cumulative.begin());
    cell = std::min(cell, m.cumulative.size() - 1);
    // Column-major storage: linear index = ix + nx * iy.
    const int ix = static_cast<int>(cell % static_cast<std::size_t>(nx));
    const int iy = static_cast<int>(cell / static_cast<std::size_t>(nx));
    const double x = out.window.x_min() + (ix + uniform01(rng)) * raster.cell_width();
    const double y = out.window.y_min() + (iy + uniform01(rng)) * raster.cell_height();
    out.points.emplace_back(x, y);
  }
  return out;
}

}  // namespace

PointPattern PointPattern::restricted(const Window& w) const {
  PointPattern out;
  out.window = w;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!w.contains(points[i])) continue;
    out.points.push_back(points[i]);
    if (labeled()) out.labels.push_back(labels[i]);
  }
  return out;
}

PointPattern PointPattern::translated(const Eigen::Vector2d& v) const {
  PointPattern out = *this;
  for (auto& p : out.points) p += v;
  return out;
}

void PointPattern::validate() const {
  if (labeled() && labels.size() != points.size()) throw ParameterError("labels must cover every point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!window.contains(points[i])) {
      throw GeometryError("point " + std::to_string(i) + " lies outside the pattern window");
    }
  }
}

PointPattern torus_shift(const PointPattern& pattern, const ShiftVector& v, const Window& w) {
  PointPattern out = pattern;
  out.window = w;
  for (auto& p : out.points) p = torus_shift(p, v, w);
  return out;
}

void StraussParams::validate() const {
  if (!(beta > 0.0)) throw ParameterError("Strauss beta must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("Strauss gamma must lie in [0, 1]");
  if (!(radius > 0.0)) throw ParameterError("Strauss interaction radius must be positive");
  if (mcmc_steps < 1) throw ParameterError("Strauss sampler needs a positive number of steps");
  if (!(expansion >= 0.0)) throw ParameterError("Strauss window expansion must be non-negative");
}

double LgcpParams::intensity() const { return std::exp(mu + 0.5 * variance); }

void LgcpParams::validate() const {
  if (!(variance >= 0.0)) throw ParameterError("LGCP variance must be non-negative");
  if (!(scale > 0.0)) throw ParameterError("LGCP scale must be positive");
  if (!std::isfinite(intensity())) throw ParameterError("LGCP intensity is not finite");
}

void ClusterParams::validate() const {
  if (!(parent_hardcore > 0.0) || !(offspring_radius > 0.0)) {
    throw ParameterError("cluster radii must be positive");
  }
  if (!(parent_activity > 0.0)) throw ParameterError("parent activity must be positive");
  if (!(mean_offspring > 0.0)) throw ParameterError("mean offspring count must be positive");
}

PointPattern sim_poisson(double intensity, const Window& w, Rng& rng) {
  if (!(intensity > 0.0)) throw ParameterError("Poisson intensity must be positive");
  PointPattern out;
  out.window = w;
  std::poisson_distribution<long> count(intensity * w.area());
  const long n = count(rng);
  out.points.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.points.push_back(uniform_in(w, rng));
  return out;
}

PointPattern cox_from_log_intensity(const FieldRaster& log_intensity, double mu, Rng& rng) {
  return place_cox_points(log_intensity, cell_measure(log_intensity, mu), rng);
}

PointPattern sim_lgcp(const LgcpParams& params, const CirculantEmbedding& embedding, Rng& rng) {
  params.validate();
  const FieldRaster z = embedding.sample(rng);
  return cox_from_log_intensity(z, params.mu, rng);
}

PointPattern sim_lgcp(const LgcpParams& params, const Window& w, GridDims grid, Rng& rng) {
  params.validate();
  if (params.variance == 0.0) return sim_poisson(std::exp(params.mu), w, rng);
  const CirculantEmbedding embedding(params.covariance(), w, grid);
  return sim_lgcp(params, embedding, rng);
}

std::pair<PointPattern, PointPattern> sim_lgcp_pair_shared(const LgcpParams& params,
                                                           const CirculantEmbedding& embedding, Rng& rng) {
  params.validate();
  const FieldRaster z = embedding.sample(rng);
  const CellMeasure m = cell_measure(z, params.mu);
  PointPattern a = place_cox_points(z, m, rng);
  PointPattern b = place_cox_points(z, m, rng);
  return {std::move(a), std::move(b)};
}

std::pair<PointPattern, PointPattern> sim_lgcp_pair_shared(const LgcpParams& params, const Window& w,
                                                           GridDims grid, Rng& rng) {
  params.validate();
  if (params.variance == 0.0) {
    PointPattern a = sim_poisson(std::exp(params.mu), w, rng);
    PointPattern b = sim_poisson(std::exp(params.mu), w, rng);
    return {std::move(a), std::move(b)};
  }
  const CirculantEmbedding embedding(params.covariance(), w, grid);
  return sim_lgcp_pair_shared(params, embedding, rng);
}

std::pair<PointPattern, PointPattern> sim_lgcp_pair_independent(const LgcpParams& params,
                                                                const CirculantEmbedding& embedding,
                                                                Rng& rng) {
  params.validate();
  auto [z1, z2] = embedding.sample_pair(rng);
  PointPattern a = cox_from_log_intensity(z1, params.mu, rng);
  PointPattern b = cox_from_log_intensity(z2, params.mu, rng);
  return {std::move(a), std::move(b)};
}

PointPattern sim_strauss(const StraussParams& params, const Window& w, Rng& rng) {
  params.validate();
  const double margin = std::min(params.expansion * params.radius, 0.25 * w.min_side());
  const Window sim(w.x_min() - margin, w.y_min() - margin, w.x_max() + margin, w.y_max() + margin);
  const long steps = static_cast<long>(std::ceil(static_cast<double>(params.mcmc_steps) * sim.area() / w.area()));
  DynamicGrid state(sim, params.radius);
  const double beta_area = params.beta * sim.area();
  for (long step = 0; step < steps; ++step) {
    const double kind = uniform01(rng);
    const std::size_t n = state.size();
    if (kind < 1.0 / 3.0) {
      const Point p = uniform_in(sim, rng);
      const int t = state.count_close(p, -1);
      const double ratio = beta_area * interaction(params.gamma, t) / static_cast<double>(n + 1);
      if (uniform01(rng) < ratio) state.add(p);
    } else if (kind < 2.0 / 3.0) {
      if (n == 0) continue;
      const std::size_t i = uniform_index(rng, n);
      const int t = state.count_close(state.point(i), static_cast<std::ptrdiff_t>(i));
      const double ratio = static_cast<double>(n) / (beta_area * interaction(params.gamma, t));
      if (uniform01(rng) < ratio) state.remove(i);
    } else {
      if (n == 0) continue;
      const std::size_t i = uniform_index(rng, n);
      const Point p = uniform_in(sim, rng);
      const int t_new = state.count_close(p, static_cast<std::ptrdiff_t>(i));
      const int t_old = state.count_close(state.point(i), static_cast<std::ptrdiff_t>(i));
      const double old_weight = interaction(params.gamma, t_old);
      const double ratio = old_weight > 0.0 ? interaction(params.gamma, t_new) / old_weight : 1.0;
      if (uniform01(rng) < ratio) state.move(i, p);
    }
  }
  PointPattern out;
  out.window = w;
  for (const auto& p : state.points()) {
    if (w.contains(p)) out.points.push_back(p);
  }
  return out;
}

std::pair<PointPattern, PointPattern> random_label_split(const PointPattern& pattern, double p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("label probability must lie in (0, 1)");
  PointPattern first;
  PointPattern second;
  first.window = pattern.window;
  second.window = pattern.window;
  for (const auto& pt : pattern.points) {
    (uniform01(rng) < p ? first : second).points.push_back(pt);
  }
  return {std::move(first), std::move(second)};
}

PointPattern jitter_copy(const PointPattern& pattern, double radius, Rng& rng) {
  if (!(radius > 0.0)) throw ParameterError("jitter radius must be positive");
  PointPattern out = pattern;
  for (auto& p : out.points) {
    double dx = 0.0;
    double dy = 0.0;
    uniform_unit_disk(rng, dx, dy);
    p = torus_wrap(p + radius * Eigen::Vector2d(dx, dy), out.window);
  }
  return out;
}

std::pair<PointPattern, PointPattern> sim_cluster_hardcore(const ClusterParams& params, const Window& w,
                                                           Rng& rng) {
  params.validate();
  StraussParams parent_law;
  parent_law.beta = params.parent_activity;
  parent_law.gamma = 0.0;
  parent_law.radius = params.parent_hardcore;
  const PointPattern parents = sim_strauss(parent_law, w, rng);
  PointPattern first;
  PointPattern second;
  first.window = w;
  second.window = w;
  std::poisson_distribution<int> offspring(params.mean_offspring);
  for (const auto& parent : parents.points) {
    PointPattern& target = uniform01(rng) < 0.5 ? first : second;
    const int k = offspring(rng);
    for (int j = 0; j < k; ++j) {
      double dx = 0.0;
      double dy = 0.0;
      uniform_unit_disk(rng, dx, dy);
      target.points.push_back(torus_wrap(parent + params.offspring_radius * Eigen::Vector2d(dx, dy), w));
    }
  }
  return {std::move(first), std::move(second)};
}

}  // namespace rshift
