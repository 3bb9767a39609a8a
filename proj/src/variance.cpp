#include "rshift/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rshift {

void TestStatisticSeries::validate() const {
  const auto n = size();
  if (n < 1) throw ParameterError("series is empty");
  if (shifts.size() != n || support.size() != n || area.size() != n) {
    throw ParameterError("series metadata does not match the number of entries");
  }
  if (!shifts[0].origin) throw ParameterError("series entry 0 must be the unshifted data");
  if (functional && r.size() != values.cols()) throw ParameterError("series r-grid does not match its values");
  if (!functional && values.cols() != 1) throw ParameterError("scalar series must have one column");
}

double KernelSpec::operator()(double u) const {
  switch (family) {
    case KernelFamily::epanechnikov:
      return u < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ParameterError("kernel bandwidth must be positive");
}

std::string to_string(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::count: return "count";
    case VarianceMethod::exact: return "exact";
    case VarianceMethod::kernel: return "kernel";
    case VarianceMethod::theorem2: return "theorem2";
  }
  return "unknown";
}

VarianceEstimate var_count(const TestStatisticSeries& series) {
  VarianceEstimate est;
  est.method = VarianceMethod::count;
  est.var.resize(series.values.rows(), series.values.cols());
  for (Eigen::Index i = 0; i < series.values.rows(); ++i) {
    const std::size_t n = series.support.at(static_cast<std::size_t>(i));
    if (n < 2) throw VarianceError("count variance needs at least 2 observations", static_cast<std::size_t>(i));
    est.var.row(i).setConstant(1.0 / static_cast<double>(n));
  }
  return est;
}

double var_theorem1(const std::vector<Point>& locations, const CovarianceModel& cov_phi,
                    const CovarianceModel& cov_psi) {
  const std::size_t n = locations.size();
  if (n < 2) throw ParameterError("Theorem-1 variance needs at least 2 locations");
  const double reach = std::min(cov_phi.range, cov_psi.range);
  const double reach2 = reach * reach;
  double diagonal = cov_phi(0.0) * cov_psi(0.0) * static_cast<double>(n);
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = (locations[i] - locations[j]).squaredNorm();
      if (d2 > reach2) continue;
      const double d = std::sqrt(d2);
      off += cov_phi(d) * cov_psi(d);
    }
  }
  const double m = static_cast<double>(n - 1);
  return (diagonal + 2.0 * off) / (m * m);
}

Eigen::MatrixXd kernel_weights(const std::vector<ShiftVector>& shifts, const KernelSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(shifts.size());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = (shifts[static_cast<std::size_t>(i)].offset - shifts[static_cast<std::size_t>(k)].offset).norm();
      w(i, k) = spec(d / spec.bandwidth);
    }
    const double mass = w.row(i).sum();
    if (!(mass > 0.0)) throw BandwidthError("no shift within the kernel bandwidth", static_cast<std::size_t>(i));
    w.row(i) /= mass;
  }
  return w;
}

VarianceEstimate var_kernel(const TestStatisticSeries& series, const KernelSpec& spec) {
  if (series.size() < 11) throw ParameterError("kernel variance needs N >= 10 shifts");
  const Eigen::MatrixXd w = kernel_weights(series.shifts, spec);
  const Eigen::RowVectorXd mean = series.values.colwise().mean();
  const Eigen::MatrixXd dev2 = (series.values.rowwise() - mean).array().square().matrix();
  VarianceEstimate est;
  est.method = VarianceMethod::kernel;
  est.var = w * dev2;
  return est;
}

Eigen::MatrixXd standardize(const TestStatisticSeries& series, const VarianceEstimate& est) {
  const Eigen::MatrixXd& t = series.values;
  if (est.var.rows() != t.rows() || est.var.cols() != t.cols()) {
    throw ParameterError("variance estimate does not match the series shape");
  }
  Eigen::MatrixXd s(t.rows(), t.cols());
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    const auto col = t.col(c);
    const double mean = col.mean();
    if (col.maxCoeff() == col.minCoeff()) {
      s.col(c).setZero();
      continue;
    }
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double v = est.var(i, c);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw VarianceError("variance estimate is not positive", static_cast<std::size_t>(i));
      }
      s(i, c) = (col(i) - mean) / std::sqrt(v);
    }
    // Equal raw values (zero pair counts at small r, say) stay tied after rescaling.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(t.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return col(a) < col(b); });
    for (std::size_t lo = 0; lo < order.size();) {
      std::size_t hi = lo + 1;
      while (hi < order.size() && col(order[hi]) == col(order[lo])) ++hi;
      if (hi - lo > 1) {
        double m = 0.0;
        for (std::size_t k = lo; k < hi; ++k) m += s(order[k], c);
        m /= static_cast<double>(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) s(order[k], c) = m;
      }
      lo = hi;
    }
  }
  return s;
}

}  // namespace rshift
