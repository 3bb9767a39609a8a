#include "rshift/theorem2.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rshift/error.hpp"
#include "rshift/parallel.hpp"

namespace rshift {

double PairCorrelation::operator()(double r) const {
  if (is_poisson()) return 1.0;
  return std::exp(variance * std::exp(-r / scale));
}

std::string PairCorrelation::describe() const {
  if (is_poisson()) return "poisson";
  return fmt::format("lgcp(variance={}, scale={})", variance, scale);
}

namespace {

constexpr double kPi = std::numbers::pi;

// Per-radius streaming sums of one integrand.
struct Accumulator {
  Eigen::ArrayXd sum, sq;
  long n = 0;

  explicit Accumulator(Eigen::Index k) : sum(Eigen::ArrayXd::Zero(k)), sq(Eigen::ArrayXd::Zero(k)) {}
  void add(Eigen::Index j, double x) {
    sum(j) += x;
    sq(j) += x * x;
  }
  Eigen::VectorXd mean() const { return (sum / static_cast<double>(n)).matrix(); }
  Eigen::VectorXd se() const {
    const double m = static_cast<double>(n);
    const Eigen::ArrayXd mu = sum / m;
    return ((sq / m - mu.square()).max(0.0) / (m - 1.0)).sqrt().matrix();
  }
};

struct Box {
  double a, b;
  bool inside(double x, double y) const { return x >= 0.0 && x <= a && y >= 0.0 && y <= b; }
  void draw(Rng& rng, double& x, double& y) const {
    x = a * uniform01(rng);
    y = b * uniform01(rng);
  }
};

double dist(double x1, double y1, double x2, double y2) { return std::hypot(x1 - x2, y1 - y2); }

}  // namespace

Theorem2Integrals theorem2_integrals(const PairCorrelation& g1, const PairCorrelation& g2, const Window& w,
                                     const Eigen::VectorXd& r_grid, long mc_points, std::uint64_t seed) {
  if (mc_points < 2) throw ParameterError("Theorem-2 integration needs at least 2 Monte Carlo points");
  const Eigen::Index k = r_grid.size();
  if (k == 0) throw ParameterError("Theorem-2 integration needs at least one radius");
  const Box box{w.width(), w.height()};
  const double area = w.area();

  Theorem2Integrals out;
  out.r = r_grid;
  out.area = area;
  out.j2.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) out.j2(j) = big_gamma(w, r_grid(j));
  Eigen::VectorXd disk(k);
  for (Eigen::Index j = 0; j < k; ++j) disk(j) = kPi * r_grid(j) * r_grid(j);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);

  // J3: a centre point c, two disk points c + r d1, c + r d2; g evaluated between the disk points.
  const auto triple_f2 = [&](const PairCorrelation& g, std::uint64_t stream, Eigen::VectorXd& value,
                             Eigen::VectorXd& se) {
    Rng rng = make_rng(seed, stream);
    Accumulator acc(k);
    acc.n = mc_points;
    for (long s = 0; s < mc_points; ++s) {
      double cx, cy, d1x, d1y, d2x, d2y;
      box.draw(rng, cx, cy);
      uniform_unit_disk(rng, d1x, d1y);
      uniform_unit_disk(rng, d2x, d2y);
      const double dd = dist(d1x, d1y, d2x, d2y);
      for (Eigen::Index j = 0; j < k; ++j) {
        const double r = r_grid(j);
        if (!box.inside(cx + r * d1x, cy + r * d1y) || !box.inside(cx + r * d2x, cy + r * d2y)) continue;
        acc.add(j, area * disk(j) * disk(j) * g(r * dd));
      }
    }
    value = acc.mean();
    se = acc.se();
  };
  triple_f2(g1, 0, out.j3_1, out.se_j3_1);
  triple_f2(g2, 1, out.j3_2, out.se_j3_2);

  // K3_1 = ∫ g1(u - u') f(u - v): g between two free points, f anchored on u.
  // K3_2 = ∫ g2(v - v') f(u - v): g between the disk point and a free point.
  const auto triple_f1 = [&](const PairCorrelation& g, bool g_on_disk_point, std::uint64_t stream,
                             Eigen::VectorXd& value, Eigen::VectorXd& se) {
    if (g.is_poisson()) {
      value = area * out.j2;
      se = zero;
      return;
    }
    Rng rng = make_rng(seed, stream);
    Accumulator acc(k);
    acc.n = mc_points;
    for (long s = 0; s < mc_points; ++s) {
      double ux, uy, fx, fy, dx, dy;
      box.draw(rng, ux, uy);
      box.draw(rng, fx, fy);
      uniform_unit_disk(rng, dx, dy);
      const double g_free = g(dist(ux, uy, fx, fy));
      for (Eigen::Index j = 0; j < k; ++j) {
        const double r = r_grid(j);
        const double vx = ux + r * dx, vy = uy + r * dy;
        if (!box.inside(vx, vy)) continue;
        const double gv = g_on_disk_point ? g(dist(vx, vy, fx, fy)) : g_free;
        acc.add(j, area * area * disk(j) * gv);
      }
    }
    value = acc.mean();
    se = acc.se();
  };
  triple_f1(g1, false, 2, out.k3_1, out.se_k3_1);
  triple_f1(g2, true, 3, out.k3_2, out.se_k3_2);

  const auto pair_g = [&](const PairCorrelation& g, std::uint64_t stream, double& value, double& se) {
    if (g.is_poisson()) {
      value = area * area;
      se = 0.0;
      return;
    }
    Rng rng = make_rng(seed, stream);
    double sum = 0.0, sq = 0.0;
    for (long s = 0; s < mc_points; ++s) {
      double ux, uy, vx, vy;
      box.draw(rng, ux, uy);
      box.draw(rng, vx, vy);
      const double x = area * area * g(dist(ux, uy, vx, vy));
      sum += x;
      sq += x * x;
    }
    const double m = static_cast<double>(mc_points);
    value = sum / m;
    se = std::sqrt(std::max(0.0, sq / m - value * value) / (m - 1.0));
  };
  pair_g(g1, 4, out.g1, out.se_g1);
  pair_g(g2, 5, out.g2, out.se_g2);

  if (g1.is_poisson() && g2.is_poisson()) {
    out.jw4_var = zero;
    out.jw4_cov = zero;
    out.se_jw4_var = zero;
    out.se_jw4_cov = zero;
    return out;
  }

  {  // [g1(u - u') g2(v - v') - 1] f(u - v) f(u' - v')
    Rng rng = make_rng(seed, 6);
    Accumulator acc(k);
    acc.n = mc_points;
    for (long s = 0; s < mc_points; ++s) {
      double ux, uy, px, py, d1x, d1y, d2x, d2y;
      box.draw(rng, ux, uy);
      box.draw(rng, px, py);
      uniform_unit_disk(rng, d1x, d1y);
      uniform_unit_disk(rng, d2x, d2y);
      const double gu = g1(dist(ux, uy, px, py));
      for (Eigen::Index j = 0; j < k; ++j) {
        const double r = r_grid(j);
        const double vx = ux + r * d1x, vy = uy + r * d1y;
        const double qx = px + r * d2x, qy = py + r * d2y;
        if (!box.inside(vx, vy) || !box.inside(qx, qy)) continue;
        acc.add(j, area * area * disk(j) * disk(j) * (gu * g2(dist(vx, vy, qx, qy)) - 1.0));
      }
    }
    out.jw4_var = acc.mean();
    out.se_jw4_var = acc.se();
  }
  {  // [g1(u - u') g2(v - v') - 1] f(u - v)
    Rng rng = make_rng(seed, 7);
    Accumulator acc(k);
    acc.n = mc_points;
    for (long s = 0; s < mc_points; ++s) {
      double ux, uy, px, py, qx, qy, dx, dy;
      box.draw(rng, ux, uy);
      box.draw(rng, px, py);
      box.draw(rng, qx, qy);
      uniform_unit_disk(rng, dx, dy);
      const double gu = g1(dist(ux, uy, px, py));
      for (Eigen::Index j = 0; j < k; ++j) {
        const double r = r_grid(j);
        const double vx = ux + r * dx, vy = uy + r * dy;
        if (!box.inside(vx, vy)) continue;
        acc.add(j, area * area * area * disk(j) * (gu * g2(dist(vx, vy, qx, qy)) - 1.0));
      }
    }
    out.jw4_cov = acc.mean();
    out.se_jw4_cov = acc.se();
  }
  return out;
}

Theorem2Moments theorem2_moments(double l1, double l2, const Theorem2Integrals& in, Eigen::Index j) {
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw ParameterError("Theorem-2 moments need positive intensities");
  const double area = in.area;
  const double a4 = area * area * area * area;
  Theorem2Moments m;
  m.mu_r = l1 * l2 * in.j2(j);
  m.mu_s = l1 * l2;
  m.var_r = l1 * l1 * l2 * l2 * in.jw4_var(j) + l1 * l1 * l2 * in.j3_1(j) + l1 * l2 * l2 * in.j3_2(j) +
            l1 * l2 * in.j2(j);
  const double f1 = l1 * l1 * in.g1 + l1 * area;
  const double f2 = l2 * l2 * in.g2 + l2 * area;
  m.var_s = f1 * f2 / a4 - l1 * l1 * l2 * l2;
  m.cov_rs = (l1 * l1 * l2 * l2 * in.jw4_cov(j) + l1 * l1 * l2 * in.k3_1(j) + l1 * l2 * l2 * in.k3_2(j) +
              l1 * l2 * in.j2(j)) /
             (area * area);
  m.se_var_r = std::sqrt(std::pow(l1 * l1 * l2 * l2 * in.se_jw4_var(j), 2) + std::pow(l1 * l1 * l2 * in.se_j3_1(j), 2) +
                         std::pow(l1 * l2 * l2 * in.se_j3_2(j), 2));
  m.se_var_s = std::hypot(l1 * l1 * in.se_g1 * f2 / a4, l2 * l2 * in.se_g2 * f1 / a4);
  m.se_cov_rs = std::sqrt(std::pow(l1 * l1 * l2 * l2 * in.se_jw4_cov(j), 2) + std::pow(l1 * l1 * l2 * in.se_k3_1(j), 2) +
                          std::pow(l1 * l2 * l2 * in.se_k3_2(j), 2)) /
                (area * area);
  return m;
}

Theorem2Moments theorem2_moments(double lambda1, double lambda2, const PairCorrelation& g1,
                                 const PairCorrelation& g2, double r, const Window& w, long mc_points,
                                 Rng& rng) {
  Eigen::VectorXd grid(1);
  grid << r;
  return theorem2_moments(lambda1, lambda2, theorem2_integrals(g1, g2, w, grid, mc_points, rng()), 0);
}

double var_ratio_taylor(const Theorem2Moments& m) {
  if (!(m.mu_r > 0.0) || !(m.mu_s > 0.0)) throw ParameterError("ratio variance needs positive means");
  const double q = m.mu_r / m.mu_s;
  return q * q * (m.var_r / (m.mu_r * m.mu_r) - 2.0 * m.cov_rs / (m.mu_r * m.mu_s) + m.var_s / (m.mu_s * m.mu_s));
}

Theorem2Surface::Theorem2Surface(const PairCorrelation& g1, const PairCorrelation& g2, const Window& base,
                                 double reach, const Eigen::VectorXd& r_grid, int nodes, long mc_points,
                                 std::uint64_t seed, unsigned workers)
    : g1_(g1), g2_(g2), r_(r_grid) {
  if (nodes < 2) throw ParameterError("Theorem-2 surface needs at least 2 nodes per axis");
  if (!(reach >= 0.0) || reach >= base.width() || reach >= base.height()) {
    throw ParameterError("Theorem-2 surface reach must be smaller than both window sides");
  }
  for (int k = 0; k < nodes; ++k) {
    widths_.push_back(base.width() - reach + reach * k / (nodes - 1));
    heights_.push_back(base.height() - reach + reach * k / (nodes - 1));
  }
  const auto n = static_cast<std::size_t>(nodes);
  table_.resize(n * n);
  parallel_for(n * n, workers, [&](std::size_t idx) {
    const double a = widths_[idx % n];
    const double b = heights_[idx / n];
    table_[idx] = theorem2_integrals(g1_, g2_, Window(0.0, 0.0, a, b), r_, mc_points, seed);
  });
}

namespace {

// Index of the left node and the fractional position within the cell.
std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double x) {
  const double lo = nodes.front(), hi = nodes.back();
  const double tol = 1e-9 * std::max(1.0, hi);
  if (x < lo - tol || x > hi + tol) throw ParameterError("window size outside the Theorem-2 surface");
  if (hi == lo) return {0, 0.0};
  x = std::clamp(x, lo, hi);
  const double step = (hi - lo) / static_cast<double>(nodes.size() - 1);
  const auto i = std::min(nodes.size() - 2, static_cast<std::size_t>((x - lo) / step));
  return {i, (x - nodes[i]) / step};
}

template <class T>
T blend(const T& a, const T& b, const T& c, const T& d, double tx, double ty) {
  return (1 - tx) * (1 - ty) * a + tx * (1 - ty) * b + (1 - tx) * ty * c + tx * ty * d;
}

}  // namespace

Theorem2Integrals Theorem2Surface::at(double width, double height) const {
  const auto [ia, tx] = locate(widths_, width);
  const auto [ib, ty] = locate(heights_, height);
  const std::size_t n = widths_.size();
  const Theorem2Integrals& p00 = table_[ia + n * ib];
  const Theorem2Integrals& p10 = table_[ia + 1 + n * ib];
  const Theorem2Integrals& p01 = table_[ia + n * (ib + 1)];
  const Theorem2Integrals& p11 = table_[ia + 1 + n * (ib + 1)];

  Theorem2Integrals out;
  const Window w(0.0, 0.0, width, height);
  out.r = r_;
  out.area = w.area();
#define RSHIFT_BLEND(field) out.field = blend<Eigen::VectorXd>(p00.field, p10.field, p01.field, p11.field, tx, ty)
  RSHIFT_BLEND(j3_1);
  RSHIFT_BLEND(j3_2);
  RSHIFT_BLEND(jw4_var);
  RSHIFT_BLEND(k3_1);
  RSHIFT_BLEND(k3_2);
  RSHIFT_BLEND(jw4_cov);
  RSHIFT_BLEND(se_j3_1);
  RSHIFT_BLEND(se_j3_2);
  RSHIFT_BLEND(se_jw4_var);
  RSHIFT_BLEND(se_k3_1);
  RSHIFT_BLEND(se_k3_2);
  RSHIFT_BLEND(se_jw4_cov);
#undef RSHIFT_BLEND
  out.g1 = blend(p00.g1, p10.g1, p01.g1, p11.g1, tx, ty);
  out.g2 = blend(p00.g2, p10.g2, p01.g2, p11.g2, tx, ty);
  out.se_g1 = blend(p00.se_g1, p10.se_g1, p01.se_g1, p11.se_g1, tx, ty);
  out.se_g2 = blend(p00.se_g2, p10.se_g2, p01.se_g2, p11.se_g2, tx, ty);

  // Terms with a closed form are evaluated exactly at the query size.
  out.j2.resize(r_.size());
  for (Eigen::Index j = 0; j < r_.size(); ++j) out.j2(j) = big_gamma(w, r_(j));
  if (g1_.is_poisson()) {
    out.k3_1 = out.area * out.j2;
    out.g1 = out.area * out.area;
  }
  if (g2_.is_poisson()) {
    out.k3_2 = out.area * out.j2;
    out.g2 = out.area * out.area;
  }
  return out;
}

Eigen::VectorXd Theorem2Surface::ratio_variance(double lambda1, double lambda2, double width, double height) const {
  const auto [ia, tx] = locate(widths_, width);
  const auto [ib, ty] = locate(heights_, height);
  const std::size_t n = widths_.size();
  const auto node = [&](std::size_t a, std::size_t b) {
    const Theorem2Integrals& in = table_[a + n * b];
    Eigen::VectorXd v(r_.size());
    for (Eigen::Index j = 0; j < r_.size(); ++j) v(j) = var_ratio_taylor(theorem2_moments(lambda1, lambda2, in, j));
    return v;
  };
  return blend<Eigen::VectorXd>(node(ia, ib), node(ia + 1, ib), node(ia, ib + 1), node(ia + 1, ib + 1), tx, ty);
}

}  // namespace rshift
