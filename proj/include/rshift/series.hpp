#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "rshift/geometry.hpp"

namespace rshift {

/// Values T_0..T_N of a statistic under the identity and N random shifts.
///
/// Row i of `values` holds T_i; scalar statistics use one column, functional
/// statistics one column per r-grid point.
struct TestStatisticSeries {
  bool functional = false;
  Eigen::VectorXd r;  // r-grid (functional only)
  Eigen::MatrixXd values;
  std::vector<ShiftVector> shifts;
  std::vector<std::size_t> support;  // n_i
  std::vector<double> area;          // |W_i|
  std::optional<Eigen::MatrixXd> standardized;
  std::size_t n_redraws = 0;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  /// N, the number of shifted entries.
  std::size_t shifts_count() const { return size() == 0 ? 0 : size() - 1; }
  /// Standardized values when present, raw values otherwise.
  const Eigen::MatrixXd& ranked_values() const { return standardized ? *standardized : values; }
  void validate() const;
};

}  // namespace rshift
