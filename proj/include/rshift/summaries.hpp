#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/gaussfield.hpp"
#include "rshift/geometry.hpp"
#include "rshift/pointsim.hpp"

namespace rshift {

struct ScalarStatistic {
  double value = 0.0;
  std::size_t n = 0;  // supporting sample size
  double area = 0.0;  // domain area
  double defect_mass = 0.0;  // KM mass beyond the r-range (mean_cross_nn only)
};

enum class FunctionalEstimator { cross_k, g12 };

struct FunctionalStatistic {
  Eigen::VectorXd r;
  Eigen::VectorXd values;
  FunctionalEstimator estimator = FunctionalEstimator::cross_k;
};

struct VariogramFit {
  double sill = 0.0;   // σ̂²
  double scale = 1.0;  // ŝ
  double max_lag = 0.0;
  int n_bins = 0;
  double rss = 0.0;

  /// Fitted covariance, truncated at truncation * scale.
  CovarianceModel covariance(double truncation = 5.0) const;
};

/// Unbiased sample covariance (1/(n-1)) Σ (φ_i - φ̄)(ψ_i - ψ̄).
template <class DerivedA, class DerivedB>
ScalarStatistic sample_covariance(const Eigen::DenseBase<DerivedA>& phi, const Eigen::DenseBase<DerivedB>& psi) {
  if (phi.size() != psi.size()) throw ParameterError("sample covariance needs vectors of equal length");
  const Eigen::Index n = phi.size();
  if (n < 2) throw ParameterError("sample covariance needs at least 2 observations");
  const auto a = phi.derived().array() - phi.derived().mean();
  const auto b = psi.derived().array() - psi.derived().mean();
  ScalarStatistic s;
  s.value = (a * b).sum() / static_cast<double>(n - 1);
  s.n = static_cast<std::size_t>(n);
  return s;
}

/// k equispaced radii on (0, fraction * min side].
Eigen::VectorXd default_r_grid(const Window& w, int k = 50, double fraction = 0.15);

/// Globally corrected (Ohser-type) cross K-function estimate on window w.
FunctionalStatistic cross_k(const PointPattern& phi, const PointPattern& psi, const Window& w,
                            const Eigen::VectorXd& r_grid);

/// Border-censored Kaplan–Meier product-limit estimate of the cross nearest-neighbour distribution.
struct KaplanMeierCurve {
  std::vector<double> times;  // distinct event times, increasing
  std::vector<double> cdf;    // Ĝ at each event time
};
KaplanMeierCurve km_cross_nn(const PointPattern& phi, const PointPattern& psi, const Window& w);

FunctionalStatistic km_g12(const PointPattern& phi, const PointPattern& psi, const Window& w,
                           const Eigen::VectorXd& r_grid);

/// ∫ r dĜ₁₂(r) up to max(r_grid); mass not reached by then is placed at max(r_grid).
ScalarStatistic mean_cross_nn(const PointPattern& phi, const PointPattern& psi, const Window& w,
                              const Eigen::VectorXd& r_grid);

struct EmpiricalVariogram {
  Eigen::VectorXd lag;    // mean pair distance per non-empty bin
  Eigen::VectorXd gamma;  // semivariance
  Eigen::VectorXd pairs;  // pair count
};

EmpiricalVariogram empirical_variogram(const std::vector<Point>& locations, const Eigen::VectorXd& values,
                                       double max_lag, int n_bins);

/// Weighted least-squares fit of σ²(1 - exp(-h/s)) to the binned semivariogram.
VariogramFit fit_exponential_variogram(const std::vector<Point>& locations, const Eigen::VectorXd& values,
                                       double max_lag, int n_bins = 15);

}  // namespace rshift
