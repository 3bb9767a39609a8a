#include <cmath>
#include <limits>

#include "rshift/summaries.hpp"

namespace rshift {

CovarianceModel VariogramFit::covariance(double truncation) const {
  return CovarianceModel::exponential(sill, scale, truncation * scale);
}

EmpiricalVariogram empirical_variogram(const std::vector<Point>& locations, const Eigen::VectorXd& values,
                                       double max_lag, int n_bins) {
  if (static_cast<Eigen::Index>(locations.size()) != values.size()) {
    throw ParameterError("variogram needs one value per location");
  }
  if (!(max_lag > 0.0)) throw ParameterError("variogram max_lag must be positive");
  if (n_bins < 1) throw ParameterError("variogram needs at least one bin");
  const double width = max_lag / n_bins;
  Eigen::VectorXd lag_sum = Eigen::VectorXd::Zero(n_bins);
  Eigen::VectorXd sq_sum = Eigen::VectorXd::Zero(n_bins);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n_bins);
  const std::size_t n = locations.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = (locations[i] - locations[j]).norm();
      if (h > max_lag) continue;
      const int b = std::min(n_bins - 1, static_cast<int>(h / width));
      const double diff = values(static_cast<Eigen::Index>(i)) - values(static_cast<Eigen::Index>(j));
      lag_sum(b) += h;
      sq_sum(b) += diff * diff;
      count(b) += 1.0;
    }
  }
  const Eigen::Index filled = (count.array() > 0.0).count();
  EmpiricalVariogram ev;
  ev.lag.resize(filled);
  ev.gamma.resize(filled);
  ev.pairs.resize(filled);
  Eigen::Index k = 0;
  for (int b = 0; b < n_bins; ++b) {
    if (count(b) == 0.0) continue;
    ev.lag(k) = lag_sum(b) / count(b);
    ev.gamma(k) = 0.5 * sq_sum(b) / count(b);
    ev.pairs(k) = count(b);
    ++k;
  }
  return ev;
}

namespace {

struct ProfileFit {
  double sill;
  double rss;
};

// For fixed scale the weighted LS problem is linear in the sill.
ProfileFit profile(const EmpiricalVariogram& ev, double scale) {
  const Eigen::ArrayXd f = 1.0 - (-ev.lag.array() / scale).exp();
  const double num = (ev.pairs.array() * ev.gamma.array() * f).sum();
  const double den = (ev.pairs.array() * f * f).sum();
  const double sill = den > 0.0 ? std::max(0.0, num / den) : 0.0;
  const double rss = (ev.pairs.array() * (ev.gamma.array() - sill * f).square()).sum();
  return {sill, rss};
}

}  // namespace

VariogramFit fit_exponential_variogram(const std::vector<Point>& locations, const Eigen::VectorXd& values,
                                       double max_lag, int n_bins) {
  if (locations.size() < 30) throw ParameterError("variogram fit needs at least 30 locations");
  const EmpiricalVariogram ev = empirical_variogram(locations, values, max_lag, n_bins);
  if (ev.lag.size() == 0) throw FitError("no location pairs within max_lag");

  const double lo = std::log(max_lag * 1e-3);
  const double hi = std::log(max_lag * 10.0);
  const auto objective = [&](double x) { return profile(ev, std::exp(x)).rss; };

  VariogramFit best;
  best.rss = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const double start : {max_lag / 10.0, max_lag / 3.0, max_lag}) {
    double x = std::log(start);
    double fx = objective(x);
    double step = std::log(2.0);
    int iterations = 0;
    while (step > 1e-7 && iterations < 2000) {
      ++iterations;
      const double xl = std::max(lo, x - step);
      const double xr = std::min(hi, x + step);
      const double fl = objective(xl);
      const double fr = objective(xr);
      if (fl < fx && fl <= fr) {
        x = xl;
        fx = fl;
      } else if (fr < fx) {
        x = xr;
        fx = fr;
      } else {
        step *= 0.5;
      }
    }
    if (step > 1e-7 || !std::isfinite(fx)) continue;
    any = true;
    if (fx < best.rss) {
      const ProfileFit p = profile(ev, std::exp(x));
      best.sill = p.sill;
      best.scale = std::exp(x);
      best.rss = p.rss;
    }
  }
  if (!any) throw FitError("variogram least squares did not converge from any start");
  best.max_lag = max_lag;
  best.n_bins = n_bins;
  return best;
}

}  // namespace rshift
