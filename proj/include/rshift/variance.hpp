#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/gaussfield.hpp"
#include "rshift/geometry.hpp"
#include "rshift/series.hpp"

namespace rshift {

enum class KernelFamily { epanechnikov };

struct KernelSpec {
  KernelFamily family = KernelFamily::epanechnikov;
  double bandwidth = 0.1;

  /// K(u) for u = distance / bandwidth.
  double operator()(double u) const;
  void validate() const;
};

enum class VarianceMethod { count, exact, kernel, theorem2 };

std::string to_string(VarianceMethod m);

/// Variance estimates var(T_i), laid out like TestStatisticSeries::values.
struct VarianceEstimate {
  Eigen::MatrixXd var;
  VarianceMethod method = VarianceMethod::count;
};

VarianceEstimate var_count(const TestStatisticSeries& series);

/// Leading term (n-1)^-2 Σ_i Σ_j C_Φ(x_i - x_j) C_Ψ(x_i - x_j) of var s_n.
double var_theorem1(const std::vector<Point>& locations, const CovarianceModel& cov_phi,
                    const CovarianceModel& cov_psi);

/// Row-normalized Nadaraya–Watson weights w_ik = K(|v_i - v_k| / h) / Σ_j K(|v_i - v_j| / h).
Eigen::MatrixXd kernel_weights(const std::vector<ShiftVector>& shifts, const KernelSpec& spec);

/// var̂(T_i) = Σ_k (T_k - T̄)² w_ik, componentwise for functional series.
VarianceEstimate var_kernel(const TestStatisticSeries& series, const KernelSpec& spec);

/// S_i = (T_i - T̄) / sqrt(var(T_i)), componentwise. A component that is
/// constant over the whole series standardizes to zero. Entries with equal T_i get equal S_i.
Eigen::MatrixXd standardize(const TestStatisticSeries& series, const VarianceEstimate& est);

}  // namespace rshift
