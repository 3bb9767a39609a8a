#include <algorithm>
#include <cmath>

#include "rshift/error.hpp"
#include "rshift/harness.hpp"

namespace rshift {

namespace {

double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Smallest p in [0, 1] with f(p) >= target for increasing f, by bisection.
template <class F>
double bisect(F f, double target) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double binomial_cdf(std::size_t k, std::size_t n, double p) {
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  double sum = 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  for (std::size_t j = 0; j <= k; ++j) {
    sum += std::exp(log_choose(n, j) + static_cast<double>(j) * lp + static_cast<double>(n - j) * lq);
  }
  return std::min(1.0, sum);
}

Interval binomial_ci(std::size_t successes, std::size_t trials, double level) {
  if (trials == 0) throw ParameterError("binomial interval needs at least one trial");
  if (successes > trials) throw ParameterError("more successes than trials");
  const double tail = 0.5 * (1.0 - level);
  Interval ci;
  // lo solves P(X >= k; p) = tail, hi solves P(X <= k; p) = tail.
  ci.lo = successes == 0 ? 0.0 : bisect([&](double p) { return 1.0 - binomial_cdf(successes - 1, trials, p); }, tail);
  ci.hi = successes == trials ? 1.0 : bisect([&](double p) { return 1.0 - binomial_cdf(successes, trials, p); }, 1.0 - tail);
  return ci;
}

Interval acceptance_band(double p, std::size_t trials, double level) {
  if (trials == 0) throw ParameterError("acceptance band needs at least one trial");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("probability must lie in [0, 1]");
  const double tail = 0.5 * (1.0 - level);
  std::size_t lo = 0;
  while (lo < trials && binomial_cdf(lo, trials, p) < tail) ++lo;
  std::size_t hi = lo;
  while (hi < trials && binomial_cdf(hi, trials, p) < 1.0 - tail) ++hi;
  const double n = static_cast<double>(trials);
  return {static_cast<double>(lo) / n, static_cast<double>(hi) / n};
}

std::pair<double, double> ks_uniform(std::vector<double> sample) {
  if (sample.empty()) throw ParameterError("KS test needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return {d, 1.0};
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16) break;
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace rshift
