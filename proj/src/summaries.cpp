#include "rshift/summaries.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "point_index.hpp"

namespace rshift {

namespace {

void check_r_grid(const Eigen::VectorXd& r) {
  if (r.size() == 0) throw ParameterError("r-grid is empty");
  if (!(r(0) > 0.0)) throw ParameterError("r-grid values must be positive");
  for (Eigen::Index j = 1; j < r.size(); ++j) {
    if (!(r(j) > r(j - 1))) throw ParameterError("r-grid must be strictly increasing");
  }
}

void require_points(const PointPattern& phi, const PointPattern& psi) {
  if (phi.empty()) throw StatisticUndefined("first pattern is empty");
  if (psi.empty()) throw StatisticUndefined("second pattern is empty");
}

}  // namespace

Eigen::VectorXd default_r_grid(const Window& w, int k, double fraction) {
  if (k < 1) throw ParameterError("r-grid needs at least one point");
  if (!(fraction > 0.0)) throw ParameterError("r-grid fraction must be positive");
  const double r_max = fraction * w.min_side();
  Eigen::VectorXd r(k);
  for (int j = 0; j < k; ++j) r(j) = r_max * (j + 1) / k;
  return r;
}

FunctionalStatistic cross_k(const PointPattern& phi, const PointPattern& psi, const Window& w,
                            const Eigen::VectorXd& r_grid) {
  check_r_grid(r_grid);
  const double r_max = r_grid(r_grid.size() - 1);
  if (r_max > 0.5 * w.min_side() * (1.0 + 1e-12)) {
    throw ParameterError("cross-K r-grid exceeds half the window's shorter side");
  }
  require_points(phi, psi);

  const std::vector<double> grid(r_grid.data(), r_grid.data() + r_grid.size());
  std::vector<double> counts(grid.size(), 0.0);
  const detail::PointIndex index(psi.points, w, r_max);
  for (const Point& x : phi.points) {
    index.for_each_within(x, r_max, [&](std::size_t, double d2) {
      const double d = std::sqrt(d2);
      const auto j = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), d) - grid.begin());
      if (j < counts.size()) counts[j] += 1.0;
    });
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  const double lambda1 = static_cast<double>(phi.size()) / w.area();
  const double lambda2 = static_cast<double>(psi.size()) / w.area();
  FunctionalStatistic out;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  out.estimator = FunctionalEstimator::cross_k;
  for (Eigen::Index j = 0; j < r_grid.size(); ++j) {
    out.values(j) = edge_factor_c(w, r_grid(j)) * counts[static_cast<std::size_t>(j)] / (lambda1 * lambda2);
  }
  return out;
}

KaplanMeierCurve km_cross_nn(const PointPattern& phi, const PointPattern& psi, const Window& w) {
  require_points(phi, psi);
  struct Obs {
    double t;
    bool event;
  };
  std::vector<Obs> obs;
  obs.reserve(phi.size());
  const double cell = std::sqrt(w.area() / static_cast<double>(psi.size()));
  const detail::PointIndex index(psi.points, w, cell);
  for (const Point& x : phi.points) {
    const double d = index.nearest_distance(x);
    const double b = w.boundary_distance(x);
    obs.push_back({std::min(d, b), d <= b});
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.t < b.t; });

  KaplanMeierCurve km;
  double survival = 1.0;
  std::size_t i = 0;
  const std::size_t n = obs.size();
  while (i < n) {
    std::size_t j = i;
    std::size_t deaths = 0;
    while (j < n && obs[j].t == obs[i].t) {
      if (obs[j].event) ++deaths;
      ++j;
    }
    if (deaths > 0) {
      const double at_risk = static_cast<double>(n - i);
      survival *= 1.0 - static_cast<double>(deaths) / at_risk;
      km.times.push_back(obs[i].t);
      km.cdf.push_back(1.0 - survival);
    }
    i = j;
  }
  return km;
}

FunctionalStatistic km_g12(const PointPattern& phi, const PointPattern& psi, const Window& w,
                           const Eigen::VectorXd& r_grid) {
  check_r_grid(r_grid);
  const KaplanMeierCurve km = km_cross_nn(phi, psi, w);
  FunctionalStatistic out;
  out.r = r_grid;
  out.values.resize(r_grid.size());
  out.estimator = FunctionalEstimator::g12;
  for (Eigen::Index j = 0; j < r_grid.size(); ++j) {
    const auto it = std::upper_bound(km.times.begin(), km.times.end(), r_grid(j));
    out.values(j) = it == km.times.begin() ? 0.0 : km.cdf[static_cast<std::size_t>(it - km.times.begin()) - 1];
  }
  return out;
}

ScalarStatistic mean_cross_nn(const PointPattern& phi, const PointPattern& psi, const Window& w,
                              const Eigen::VectorXd& r_grid) {
  check_r_grid(r_grid);
  const double r_max = r_grid(r_grid.size() - 1);
  const KaplanMeierCurve km = km_cross_nn(phi, psi, w);
  double mean = 0.0;
  double previous = 0.0;
  for (std::size_t j = 0; j < km.times.size() && km.times[j] <= r_max; ++j) {
    mean += km.times[j] * (km.cdf[j] - previous);
    previous = km.cdf[j];
  }
  const double defect = std::max(0.0, 1.0 - previous);
  if (defect > 1e-12) {
    mean += defect * r_max;
    spdlog::debug("mean_cross_nn: KM mass {:.4f} beyond r = {:.4g} placed at r_max", defect, r_max);
  }
  ScalarStatistic s;
  s.value = mean;
  s.n = phi.size();
  s.area = w.area();
  s.defect_mass = defect;
  return s;
}

}  // namespace rshift
