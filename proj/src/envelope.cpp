#include <algorithm>
#include <limits>
#include <vector>

#include "rshift/shifttest.hpp"

namespace rshift {

ErlResult erl_test(const Eigen::MatrixXd& curves, double alpha) {
  const Eigen::Index n = curves.rows();
  const Eigen::Index k = curves.cols();
  if (n < 2) throw ParameterError("envelope test needs at least one simulated curve");
  if (k < 1) throw ParameterError("envelope test needs a non-empty r-grid");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");

  // Pointwise two-sided extreme ranks; ties take the larger (less extreme) rank.
  std::vector<std::vector<int>> ranks(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(k)));
  std::vector<double> col(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = curves(i, j);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = col[static_cast<std::size_t>(i)];
      const auto below = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
      const auto above = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x);
      ranks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<int>(std::min(below, above));
    }
  }
  for (auto& r : ranks) std::sort(r.begin(), r.end());

  // c_i = #{l : ranks_l <=lex ranks_i}, via the sorted order of the rank vectors.
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks[a] < ranks[b]; });
  ErlResult out;
  out.extremeness.resize(n);
  std::size_t pos = 0;
  while (pos < order.size()) {
    std::size_t end = pos;
    while (end < order.size() && ranks[order[end]] == ranks[order[pos]]) ++end;
    for (std::size_t q = pos; q < end; ++q) out.extremeness(static_cast<Eigen::Index>(order[q])) = static_cast<int>(end);
    pos = end;
  }
  out.p_value = static_cast<double>(out.extremeness(0)) / static_cast<double>(n);

  const double cut = alpha * static_cast<double>(n);
  out.lo = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  out.hi = Eigen::VectorXd::Constant(k, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<double>(out.extremeness(i)) <= cut) continue;
    out.lo = out.lo.cwiseMin(curves.row(i).transpose());
    out.hi = out.hi.cwiseMax(curves.row(i).transpose());
  }
  return out;
}

}  // namespace rshift
