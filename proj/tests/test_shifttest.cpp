#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rshift/error.hpp"
#include "rshift/harness.hpp"
#include "rshift/shifttest.hpp"
#include "rshift/summaries.hpp"

using namespace rshift;

namespace {

FieldData null_fields(std::uint64_t seed, double scale = 0.1, int grid = 64) {
  Rng rng(seed);
  const Window w;
  const CirculantEmbedding emb(CovarianceModel::exponential(1.0, scale), w, {grid, grid});
  auto [phi, psi] = emb.sample_pair(rng);
  return FieldData{std::move(phi), std::move(psi), draw_binomial_design(100, w, rng)};
}

PatternData poisson_pair(std::uint64_t seed, double lambda = 150) {
  Rng rng(seed);
  return PatternData{sim_poisson(lambda, Window(), rng), sim_poisson(lambda, Window(), rng)};
}

StrategyConfig config(const std::string& method, std::size_t n = 99) {
  StrategyConfig cfg = parse_method(method);
  cfg.n_shifts = n;
  if (cfg.strategy != Strategy::minus) cfg.law = ShiftLaw::disk(0.5);
  return cfg;
}

TestStatisticSeries run_series(const TestData& d, const StrategyConfig& cfg, std::uint64_t seed) {
  switch (cfg.strategy) {
    case Strategy::torus: return run_torus(d, cfg, seed);
    case Strategy::minus: return run_minus(d, cfg, seed);
    default: return run_variance(d, cfg, seed);
  }
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("RS_torus").strategy == Strategy::torus);
  CHECK(parse_method("RS_torus").statistic == StatisticKind::covariance);
  const StrategyConfig m = parse_method("RS_minus");
  CHECK(m.law.kind == ShiftLaw::Kind::rect);
  CHECK(m.law.half_x == doctest::Approx(1.0 / 3));
  CHECK(parse_method("RS_var").strategy == Strategy::var_exact);
  CHECK(parse_method("RS_K,var").strategy == Strategy::var_theorem2);
  CHECK(parse_method("RS_count").strategy == Strategy::var_count);
  const StrategyConfig k = parse_method("RS_{G,ker}(0.15)");
  CHECK(k.strategy == Strategy::var_kernel);
  CHECK(k.statistic == StatisticKind::mean_nn);
  CHECK(k.bandwidth == 0.15);
  for (const std::string name : {"RS_torus", "RS_minus", "RS_count", "RS_var", "RS_ker(0.05)", "RS_K,torus",
                                 "RS_K,minus", "RS_K,ker(0.1)", "RS_K,var", "RS_G,torus", "RS_G,ker(0.15)"}) {
    CHECK(parse_method(parse_method(name).method_name()).method_name() == parse_method(name).method_name());
  }
  CHECK_THROWS_AS(parse_method("RS_foo"), ParameterError);
  CHECK_THROWS_AS(parse_method("RS_torus(0.1)"), ParameterError);
  CHECK_THROWS_AS(parse_method("RS_K,count"), ParameterError);
  CHECK_THROWS_AS(parse_method("RS_G,var"), ParameterError);
}

TEST_CASE("configuration validation") {
  const Window w;
  StrategyConfig cfg = config("RS_torus", 18);
  CHECK_THROWS_AS(cfg.validate(w), ParameterError);
  cfg.n_shifts = 19;
  CHECK_NOTHROW(cfg.validate(w));
  StrategyConfig minus = config("RS_minus");
  CHECK_NOTHROW(minus.validate(w));
  minus.law = ShiftLaw::disk(0.5);
  CHECK_THROWS_AS(minus.validate(w), ParameterError);
  minus.law = ShiftLaw::rect(1.0 / 3, 1.0 / 3);
  minus.margin_x = minus.margin_y = 0.6;
  CHECK_THROWS(minus.validate(w));
}

TEST_CASE("series shape and the unshifted entry") {
  const FieldData f = null_fields(1);
  const PatternData p = poisson_pair(2);
  const double t0 = sample_covariance(read_field(f.phi, f.design), read_field(f.psi, f.design)).value;
  for (const std::string method : {"RS_torus", "RS_count", "RS_var", "RS_ker(0.1)"}) {
    CAPTURE(method);
    const TestStatisticSeries s = run_series(f, config(method), 3);
    CHECK_NOTHROW(s.validate());
    CHECK(s.size() == 100);
    CHECK(s.shifts_count() == 99);
    CHECK(s.shifts[0].origin);
    CHECK(s.values(0, 0) == doctest::Approx(t0).epsilon(1e-12));
    CHECK(s.area[0] == 1.0);
    CHECK(s.support[0] == 100);
  }
  for (const std::string method : {"RS_K,torus", "RS_K,ker(0.1)", "RS_G,torus", "RS_G,minus"}) {
    CAPTURE(method);
    const TestStatisticSeries s = run_series(p, config(method), 4);
    CHECK(s.size() == 100);
    CHECK(s.shifts[0].origin);
  }
  const Eigen::VectorXd r = default_r_grid(Window());
  const TestStatisticSeries k = run_torus(p, config("RS_K,torus"), 5);
  CHECK(k.functional);
  CHECK((k.values.row(0).transpose() - cross_k(p.phi, p.psi, Window(), r).values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a negligible shift reproduces T0") {
  const FieldData f = null_fields(6);
  const PatternData p = poisson_pair(7);
  for (const std::string method : {"RS_torus", "RS_count"}) {
    StrategyConfig cfg = config(method);
    cfg.law = ShiftLaw::disk(1e-13);
    const TestStatisticSeries s = run_series(f, cfg, 8);
    CHECK((s.values.array() - s.values(0, 0)).abs().maxCoeff() < 1e-12);
  }
  StrategyConfig cfg = config("RS_K,torus");
  cfg.law = ShiftLaw::disk(1e-13);
  const TestStatisticSeries s = run_torus(p, cfg, 9);
  for (Eigen::Index i = 1; i < s.values.rows(); ++i) CHECK((s.values.row(i) - s.values.row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant psi gives a constant covariance series") {
  FieldData f = null_fields(10);
  f.psi.values().setConstant(2.5);
  for (const std::string method : {"RS_torus", "RS_minus", "RS_ker(0.1)"}) {
    const TestStatisticSeries s = run_series(f, config(method), 11);
    CHECK(s.values.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(mc_pvalue_scalar(s).p_value == 1.0);
  }
}

TEST_CASE("minus strategy works on the eroded window") {
  const FieldData f = null_fields(12);
  const Window wc = erode(Window(), 1.0 / 3, 1.0 / 3);
  std::size_t inside = 0;
  for (const auto& x : f.design.locations) inside += wc.contains(x);
  const TestStatisticSeries s = run_minus(f, config("RS_minus"), 13);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.support[i] == inside);
    CHECK(s.area[i] == doctest::Approx(wc.area()));
  }
  for (std::size_t i = 1; i < s.size(); ++i) {
    CHECK(std::abs(s.shifts[i].dx()) <= 1.0 / 3);
    CHECK(std::abs(s.shifts[i].dy()) <= 1.0 / 3);
  }
}

TEST_CASE("variance strategies") {
  const FieldData f = null_fields(14);
  SUBCASE("count rule ranks equal centred-times-root-n ranks") {
    const TestStatisticSeries s = run_variance(f, config("RS_count"), 15);
    REQUIRE(s.standardized);
    const Eigen::VectorXd t = s.values.col(0);
    const double mean = t.mean();
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double a = (t(i) - mean) * std::sqrt(static_cast<double>(s.support[i]));
        const double b = (t(j) - mean) * std::sqrt(static_cast<double>(s.support[j]));
        if (std::abs(a - b) > 1e-12) CHECK(((*s.standardized)(i, 0) < (*s.standardized)(j, 0)) == (a < b));
      }
    }
  }
  SUBCASE("tiny shifts approach pure centring") {
    StrategyConfig cfg = config("RS_count");
    cfg.law = ShiftLaw::disk(1e-9);
    const TestStatisticSeries s = run_variance(f, cfg, 16);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.area[i] == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(s.support[i] == 100);
    }
  }
  SUBCASE("intersection supports") {
    const TestStatisticSeries s = run_variance(f, config("RS_ker(0.1)"), 17);
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double a = (1 - std::abs(s.shifts[i].dx())) * (1 - std::abs(s.shifts[i].dy()));
      CHECK(s.area[i] == doctest::Approx(a));
      CHECK(s.support[i] <= 100);
    }
  }
}

TEST_CASE("scalar Monte Carlo p-values") {
  Eigen::VectorXd s(1000);
  for (int i = 0; i < 1000; ++i) s(i) = i;
  s(0) = 5000;
  CHECK(mc_pvalue(s) == doctest::Approx(0.002));
  CHECK(mc_pvalue(s, Alternative::greater) == doctest::Approx(0.001));
  CHECK(mc_pvalue(s, Alternative::less) == doctest::Approx(1.0));
  Eigen::VectorXd med(20);
  for (int i = 0; i < 20; ++i) med(i) = i;
  med(0) = 10.0;  // N = 19, 19 others: 1..19, 10 is the median
  CHECK(mc_pvalue(med) == 1.0);
  CHECK(mc_pvalue(Eigen::VectorXd::Constant(50, 3.0)) == 1.0);

  SUBCASE("invariance under strictly increasing transforms") {
    Rng rng(18);
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(100);
      for (auto& v : x) v = uniform(rng, -1, 1);
      const Eigen::VectorXd y = x.array().exp() * 3.0 + 1.0;
      const Eigen::VectorXd z = x.array().cube();
      CHECK(mc_pvalue(x) == mc_pvalue(y));
      CHECK(mc_pvalue(x) == mc_pvalue(z));
      const double p = mc_pvalue(x);
      CHECK(p >= 1.0 / 100);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("extreme rank length envelope") {
  Rng rng(19);
  const int n = 100, k = 10;
  Eigen::MatrixXd curves(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) curves(i, j) = uniform01(rng);
  SUBCASE("an outlying curve is maximally extreme") {
    Eigen::MatrixXd c = curves;
    c.row(0).setConstant(2.0);
    const ErlResult e = erl_test(c);
    CHECK(e.p_value == doctest::Approx(1.0 / n));
  }
  SUBCASE("duplicated curve ties") {
    Eigen::MatrixXd c = curves;
    c.row(0) = c.row(5);
    const ErlResult e = erl_test(c);
    CHECK(e.extremeness(0) == e.extremeness(5));
    CHECK(e.p_value >= 2.0 / n);
  }
  SUBCASE("p-value bounds and envelope ordering") {
    for (int rep = 0; rep < 20; ++rep) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) curves(i, j) = uniform01(rng);
      const ErlResult e = erl_test(curves);
      CHECK(e.p_value >= 1.0 / n);
      CHECK(e.p_value <= 1.0);
      CHECK((e.lo.array() <= e.hi.array()).all());
    }
  }
  SUBCASE("one-point grid equals the two-sided scalar test") {
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::VectorXd x(n);
      for (auto& v : x) v = uniform01(rng);
      CHECK(erl_test(x) .p_value == doctest::Approx(mc_pvalue(x)));
    }
  }
  CHECK_THROWS_AS(erl_test(Eigen::MatrixXd::Ones(1, 5)), ParameterError);
}

TEST_CASE("functional test results carry an envelope") {
  const PatternData p = poisson_pair(20);
  const TestResult r = run_test(p, config("RS_K,torus"), 21);
  REQUIRE(r.envelope);
  CHECK(r.envelope->r.size() == 50);
  CHECK(r.p_value >= 1.0 / 100);
  CHECK(r.n_shifts == 99);
  CHECK(r.method == "RS_K,torus");
  const TestResult g = run_test(p, config("RS_G,torus"), 21);
  CHECK_FALSE(g.envelope);
}

TEST_CASE("results are deterministic and independent of worker count") {
  const FieldData f = null_fields(22);
  const PatternData p = poisson_pair(23);
  for (const std::string method : {"RS_torus", "RS_minus", "RS_count", "RS_var", "RS_ker(0.1)"}) {
    StrategyConfig cfg = config(method);
    const double a = run_test(f, cfg, 24).p_value;
    cfg.workers = 3;
    CHECK(run_test(f, cfg, 24).p_value == a);
  }
  for (const std::string method : {"RS_K,torus", "RS_K,minus", "RS_K,ker(0.1)", "RS_G,torus", "RS_G,minus"}) {
    StrategyConfig cfg = config(method);
    const double a = run_test(p, cfg, 25).p_value;
    cfg.workers = 2;
    CHECK(run_test(p, cfg, 25).p_value == a);
  }
}

TEST_CASE("Theorem-2 variance test on Poisson data") {
  const PatternData p = poisson_pair(26);
  StrategyConfig cfg = config("RS_K,var", 39);
  cfg.mc_points = 100000;
  cfg.surface_nodes = 3;
  const TestResult r = run_test(p, cfg, 27);
  CHECK(r.p_value >= 1.0 / 40);
  CHECK(r.variance_method == "theorem2");
  CHECK(run_test(p, cfg, 27).p_value == r.p_value);
}

TEST_CASE("kind and window mismatches") {
  const FieldData f = null_fields(28);
  CHECK_THROWS_AS(run_test(f, config("RS_K,torus"), 1), KindMismatchError);
  const PatternData p = poisson_pair(29);
  CHECK_THROWS_AS(run_test(p, config("RS_torus"), 1), KindMismatchError);
  PatternData q = p;
  q.psi.window = Window(0, 0, 2, 1);
  q.psi.points.clear();
  q.psi.points.emplace_back(1.5, 0.5);
  CHECK_THROWS_AS(run_test(q, config("RS_K,torus"), 1), WindowMismatchError);
}

TEST_CASE("result JSON round trip") {
  const PatternData p = poisson_pair(30);
  const TestResult r = run_test(p, config("RS_K,torus"), 31);
  const TestResult back = test_result_from_json(to_json(r));
  CHECK(back.p_value == r.p_value);
  CHECK(back.method == r.method);
  CHECK(back.n_shifts == r.n_shifts);
  CHECK(back.seed == r.seed);
  REQUIRE(back.envelope);
  CHECK((back.envelope->hi - r.envelope->hi).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(test_result_from_json("{\"p_value\": 0.5}"), FormatError);
  CHECK_THROWS_AS(test_result_from_json("not json"), FormatError);
}

TEST_CASE("minus strategy p-values are uniform under the null") {
  // 20 re-runs of a 300-replicate null experiment; KS at 1% must pass in at least 95% of them.
  const Window w;
  const CirculantEmbedding emb(CovarianceModel::exponential(1.0, 0.1), w, {64, 64});
  StrategyConfig cfg = config("RS_minus", 99);
  int passes = 0;
  const int reruns = 20;
  for (int run = 0; run < reruns; ++run) {
    std::vector<double> p;
    for (int rep = 0; rep < 300; ++rep) {
      Rng rng = make_rng(1000 + run, rep);
      auto [phi, psi] = emb.sample_pair(rng);
      const FieldData d{std::move(phi), std::move(psi), draw_binomial_design(100, w, rng)};
      // Randomized p-value removes the discreteness of the rank test before the KS check.
      const TestStatisticSeries s = run_minus(d, cfg, rng());
      const Eigen::VectorXd t = s.values.col(0);
      int above = 0, ties = 0;
      for (Eigen::Index i = 1; i < t.size(); ++i) {
        above += t(i) > t(0);
        ties += t(i) == t(0);
      }
      p.push_back((above + uniform01(rng) * (ties + 1)) / static_cast<double>(t.size()));
    }
    passes += ks_uniform(p).second >= 0.01;
  }
  CHECK(passes >= 0.95 * reruns);
}
