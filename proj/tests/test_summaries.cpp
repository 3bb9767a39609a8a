#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rshift/error.hpp"
#include "rshift/summaries.hpp"

using namespace rshift;
using std::numbers::pi;

namespace {

PointPattern pattern(const Window& w, std::vector<Point> pts) {
  PointPattern p;
  p.window = w;
  p.points = std::move(pts);
  return p;
}

}  // namespace

TEST_CASE("sample covariance") {
  Eigen::Vector2d a(0, 2), b(2, 0);
  CHECK(sample_covariance(a, a).value == doctest::Approx(2.0));
  CHECK(sample_covariance(a, b).value == doctest::Approx(-2.0));
  CHECK(sample_covariance(a, b).n == 2);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(7, 3.0);
  CHECK(sample_covariance(c, c).value == 0.0);
  CHECK_THROWS_AS(sample_covariance(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)), ParameterError);
  CHECK_THROWS_AS(sample_covariance(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4)), ParameterError);

  SUBCASE("symmetry, centering and scaling") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(20), y(20);
      for (int i = 0; i < 20; ++i) {
        x(i) = uniform(rng, -2, 2);
        y(i) = uniform(rng, -2, 2);
      }
      const double s = sample_covariance(x, y).value;
      CHECK(sample_covariance(y, x).value == doctest::Approx(s).epsilon(1e-12));
      const Eigen::VectorXd xs = (x.array() + 5.0).matrix();
      const Eigen::VectorXd ys = (y.array() - 3.0).matrix();
      CHECK(sample_covariance(xs, ys).value == doctest::Approx(s).epsilon(1e-10));
      CHECK(sample_covariance((2.5 * x).eval(), (-3.0 * y).eval()).value == doctest::Approx(-7.5 * s).epsilon(1e-12));
    }
  }
}

TEST_CASE("default r grid") {
  const Eigen::VectorXd r = default_r_grid(Window());
  REQUIRE(r.size() == 50);
  CHECK(r(49) == doctest::Approx(0.15));
  CHECK(r(0) == doctest::Approx(0.003));
  for (int i = 1; i < 50; ++i) CHECK(r(i) > r(i - 1));
  CHECK(default_r_grid(Window(0, 0, 2, 4))(49) == doctest::Approx(0.3));
}

TEST_CASE("cross K single pair") {
  const Window w;
  const auto phi = pattern(w, {{0.3, 0.5}});
  const auto psi = pattern(w, {{0.4, 0.5}});
  const Eigen::VectorXd r = default_r_grid(w);
  const FunctionalStatistic k = cross_k(phi, psi, w, r);
  CHECK(k.estimator == FunctionalEstimator::cross_k);
  for (int i = 0; i < r.size(); ++i) {
    if (r(i) < 0.1 - 1e-12) {
      CHECK(k.values(i) == 0.0);
    } else if (r(i) > 0.1 + 1e-12) {
      CHECK(k.values(i) == doctest::Approx(edge_factor_c(w, r(i))).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(cross_k(pattern(w, {}), psi, w, r), StatisticUndefined);
  CHECK_THROWS_AS(cross_k(phi, pattern(w, {}), w, r), StatisticUndefined);
  Eigen::VectorXd bad(2);
  bad << 0.1, 0.6;
  CHECK_THROWS_AS(cross_k(phi, psi, w, bad), ParameterError);
}

TEST_CASE("cross K agrees with a direct pair count") {
  const Window w(0, 0, 1.5, 1);
  const Eigen::VectorXd r = default_r_grid(w);
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng = make_rng(2, rep);
    const auto a = sim_poisson(120, w, rng);
    const auto b = sim_poisson(80, w, rng);
    if (a.empty() || b.empty()) continue;
    const FunctionalStatistic k = cross_k(a, b, w, r);
    const double l1 = a.size() / w.area(), l2 = b.size() / w.area();
    for (int i = 0; i < r.size(); i += 7) {
      const double expect = edge_factor_c(w, r(i)) * oracle::pair_count(a.points, b.points, r(i)) / (l1 * l2);
      CHECK(k.values(i) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("cross K is unbiased for independent Poisson pairs") {
  const Window w;
  Eigen::VectorXd r(3);
  r << 0.05, 0.10, 0.15;
  std::vector<std::vector<double>> k(3);
  for (int rep = 0; rep < 500; ++rep) {
    Rng rng = make_rng(3, rep);
    const auto a = sim_poisson(150, w, rng);
    const auto b = sim_poisson(150, w, rng);
    const FunctionalStatistic f = cross_k(a, b, w, r);
    for (int j = 0; j < 3; ++j) k[j].push_back(f.values(j));
  }
  for (int j = 0; j < 3; ++j) {
    const auto m = oracle::mean_se(k[j]);
    CHECK(std::abs(m.mean - pi * r(j) * r(j)) < 3 * m.se);
  }
}

TEST_CASE("cross K swap symmetry and translation equivariance") {
  const Window w(0, 0, 1, 2);
  Rng rng(4);
  const auto a = sim_poisson(100, w, rng);
  const auto b = sim_poisson(70, w, rng);
  const Eigen::VectorXd r = default_r_grid(w);
  const Eigen::VectorXd k = cross_k(a, b, w, r).values;
  CHECK((cross_k(b, a, w, r).values - k).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  const Eigen::Vector2d v(3.25, -7.5);
  const Window wt = w.translated(v);
  const Eigen::VectorXd kt = cross_k(a.translated(v), b.translated(v), wt, r).values;
  CHECK((kt - k).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  const Eigen::VectorXd g = km_g12(a, b, w, r).values;
  const Eigen::VectorXd gt = km_g12(a.translated(v), b.translated(v), wt, r).values;
  CHECK((gt - g).cwiseAbs().maxCoeff() <= 1e-12);
  const double m = mean_cross_nn(a, b, w, r).value;
  CHECK(mean_cross_nn(a.translated(v), b.translated(v), wt, r).value == doctest::Approx(m).epsilon(1e-12));
}

TEST_CASE("Kaplan-Meier without censoring is the empirical CDF") {
  const Window w;
  Rng rng(5);
  const auto dense = sim_poisson(3000, w, rng);
  PointPattern inner;
  inner.window = w;
  for (int i = 0; i < 60; ++i) inner.points.emplace_back(uniform(rng, 0.4, 0.6), uniform(rng, 0.4, 0.6));
  std::vector<double> d;
  for (const auto& x : inner.points) d.push_back(oracle::nearest(x, dense.points));
  std::sort(d.begin(), d.end());
  REQUIRE(d.back() < 0.4);
  const KaplanMeierCurve km = km_cross_nn(inner, dense, w);
  REQUIRE(!km.times.empty());
  for (std::size_t j = 0; j < km.times.size(); ++j) {
    const double t = km.times[j];
    const double ecdf = static_cast<double>(std::upper_bound(d.begin(), d.end(), t) - d.begin()) / d.size();
    CHECK(km.cdf[j] == doctest::Approx(ecdf).epsilon(1e-12));
  }
  CHECK(km.cdf.back() == doctest::Approx(1.0));
  // Very dense Ψ: G jumps to about 1 almost immediately.
  Eigen::VectorXd r(1);
  r << 0.05;
  CHECK(km_g12(inner, dense, w, r).values(0) > 0.99);
}

TEST_CASE("G12 for Poisson targets") {
  const Window w;
  const Eigen::VectorXd r = default_r_grid(w);
  const double lambda = 150;
  std::vector<std::vector<double>> g(r.size());
  std::vector<double> mean_nn, mean_nn_dense;
  for (int rep = 0; rep < 500; ++rep) {
    Rng rng = make_rng(6, rep);
    const auto a = sim_poisson(150, w, rng);
    const auto b = sim_poisson(lambda, w, rng);
    const auto b2 = sim_poisson(2 * lambda, w, rng);
    const FunctionalStatistic f = km_g12(a, b, w, r);
    CHECK(f.estimator == FunctionalEstimator::g12);
    for (int i = 0; i < r.size(); ++i) {
      REQUIRE(f.values(i) >= 0.0);
      REQUIRE(f.values(i) <= 1.0);
      if (i > 0) REQUIRE(f.values(i) >= f.values(i - 1));
      g[i].push_back(f.values(i));
    }
    mean_nn.push_back(mean_cross_nn(a, b, w, r).value);
    mean_nn_dense.push_back(mean_cross_nn(a, b2, w, r).value);
  }
  for (int i : {4, 9, 19, 29}) {
    const auto m = oracle::mean_se(g[i]);
    CHECK(std::abs(m.mean - (1 - std::exp(-lambda * pi * r(i) * r(i)))) < 3 * m.se);
  }
  const auto m = oracle::mean_se(mean_nn);
  CHECK(std::abs(m.mean - 1.0 / (2.0 * std::sqrt(lambda))) < 3 * m.se);
  CHECK(oracle::mean_se(mean_nn_dense).mean < m.mean);
}

TEST_CASE("mean nearest distance edge cases") {
  const Window w;
  const Eigen::VectorXd r = default_r_grid(w);
  const auto phi = pattern(w, {{0.5, 0.5}});
  const auto psi = pattern(w, {{0.57, 0.5}});
  const ScalarStatistic s = mean_cross_nn(phi, psi, w, r);
  CHECK(s.value == doctest::Approx(0.07));
  CHECK(s.defect_mass == 0.0);
  // Nearest neighbour beyond the grid: all mass is defect, placed at the top grid value.
  const auto far = pattern(w, {{0.5, 0.9}});
  const ScalarStatistic d = mean_cross_nn(phi, far, w, r);
  CHECK(d.value == doctest::Approx(0.15));
  CHECK(d.defect_mass == doctest::Approx(1.0));
  CHECK_THROWS_AS(mean_cross_nn(pattern(w, {}), psi, w, r), StatisticUndefined);
  CHECK_THROWS_AS(km_g12(phi, pattern(w, {}), w, r), StatisticUndefined);
}

TEST_CASE("exponential variogram fit") {
  const Window w;
  SUBCASE("recovers the scale on a window much wider than s") {
    const Window big(0, 0, 5, 5);
    const CirculantEmbedding emb(CovarianceModel::exponential(1.0, 0.5), big, {128, 128});
    int inside = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng = make_rng(7, rep);
      const FieldRaster f = emb.sample(rng);
      const SampleDesign d = draw_binomial_design(2000, big, rng);
      const VariogramFit fit = fit_exponential_variogram(d.locations, read_field(f, d), 2.5);
      inside += fit.scale >= 0.3 && fit.scale <= 0.8;
    }
    CHECK(inside >= 0.9 * reps);
  }
  SUBCASE("recovers the scale on the unit square") {
    const CirculantEmbedding emb(CovarianceModel::exponential(1.0, 0.5), w, {128, 128});
    int inside = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng = make_rng(7, rep);
      const FieldRaster f = emb.sample(rng);
      const SampleDesign d = draw_binomial_design(2000, w, rng);
      const VariogramFit fit = fit_exponential_variogram(d.locations, read_field(f, d), 0.5);
      CHECK(fit.sill >= 0.0);
      CHECK(fit.scale > 0.0);
      inside += fit.scale >= 0.3 && fit.scale <= 0.8;
    }
    CHECK(inside >= 0.9 * reps);
  }
  SUBCASE("white noise") {
    Rng rng(8);
    const SampleDesign d = draw_binomial_design(500, w, rng);
    std::normal_distribution<double> z;
    Eigen::VectorXd v(500);
    for (auto& x : v) x = z(rng);
    const VariogramFit fit = fit_exponential_variogram(d.locations, v, 0.5);
    CHECK(fit.scale <= 0.5 / 10);
    const double var = (v.array() - v.mean()).square().sum() / 499.0;
    CHECK(fit.sill == doctest::Approx(var).epsilon(0.1));
  }
  SUBCASE("constant field") {
    Rng rng(9);
    const SampleDesign d = draw_binomial_design(100, w, rng);
    CHECK(fit_exponential_variogram(d.locations, Eigen::VectorXd::Constant(100, 2.0), 0.5).sill == 0.0);
  }
  SUBCASE("too few locations") {
    Rng rng(10);
    const SampleDesign d = draw_binomial_design(20, w, rng);
    CHECK_THROWS_AS(fit_exponential_variogram(d.locations, Eigen::VectorXd::Ones(20), 0.5), ParameterError);
  }
}

TEST_CASE("fitted covariance is truncated") {
  VariogramFit fit;
  fit.sill = 2.0;
  fit.scale = 0.1;
  const CovarianceModel c = fit.covariance();
  CHECK(c(0.0) == 2.0);
  CHECK(c(0.49) > 0.0);
  CHECK(c(0.51) == 0.0);
}
