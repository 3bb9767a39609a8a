#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "rshift/error.hpp"
#include "rshift/gaussfield.hpp"

using namespace rshift;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rshift_gf_" + name)).string();
}

}  // namespace

TEST_CASE("covariance model") {
  const auto c = CovarianceModel::exponential(2.0, 0.5);
  CHECK(c(0.0) == 2.0);
  CHECK(c(0.5) == doctest::Approx(2.0 * std::exp(-1.0)));
  double prev = c(0.0);
  for (double r = 0.0; r < 3.0; r += 0.05) {
    CHECK(c(r) >= 0.0);
    CHECK(c(r) <= prev);
    prev = c(r);
  }
  const auto t = CovarianceModel::exponential(1.0, 0.1, 0.5);
  CHECK(t(0.49) > 0.0);
  CHECK(t(0.51) == 0.0);
  CHECK_THROWS_AS(CovarianceModel::exponential(1.0, 0.0).validate(), ParameterError);
  CHECK_THROWS_AS(CovarianceModel::exponential(-1.0, 0.1).validate(), ParameterError);
}

TEST_CASE("simulation is reproducible") {
  const auto m = CovarianceModel::exponential(1.0, 0.2);
  Rng a(77), b(77);
  const FieldRaster fa = simulate_grf(m, Window(), {64, 64}, a);
  const FieldRaster fb = simulate_grf(m, Window(), {64, 64}, b);
  CHECK((fa.values().array() == fb.values().array()).all());
  CHECK_THROWS_AS(simulate_grf(m, Window(), {1, 64}, a), ParameterError);
}

TEST_CASE("grid lag covariances match the model") {
  // 500 replicates on a 64 grid; lags 0, s, 2s with s = 8 cells.
  const Window w;
  const GridDims grid{64, 64};
  const double s = 8.0 / 64.0;
  const CirculantEmbedding emb(CovarianceModel::exponential(1.0, s), w, grid);
  CHECK(emb.truncated_mass() < 1e-2);
  std::vector<double> c0, c1, c2;
  for (int rep = 0; rep < 500; ++rep) {
    Rng rng = make_rng(5, rep);
    const Eigen::MatrixXd& z = emb.sample(rng).values();
    c0.push_back(z(20, 30) * z(20, 30));
    c1.push_back(z(20, 30) * z(28, 30));
    c2.push_back(z(20, 30) * z(20, 46));
  }
  const auto m0 = oracle::mean_se(c0), m1 = oracle::mean_se(c1), m2 = oracle::mean_se(c2);
  CHECK(std::abs(m0.mean - 1.0) < 3 * m0.se);
  CHECK(std::abs(m1.mean - std::exp(-1.0)) < 3 * m1.se);
  CHECK(std::abs(m2.mean - std::exp(-2.0)) < 3 * m2.se);
}

TEST_CASE("per-cell variance and lag correlation at s = 0.5") {
  const Window w;
  const CirculantEmbedding emb(CovarianceModel::exponential(1.0, 0.5), w, {64, 64});
  std::vector<double> v, c;
  for (int rep = 0; rep < 1000; ++rep) {
    Rng rng = make_rng(6, rep);
    const FieldRaster f = emb.sample(rng);
    v.push_back(f.values()(10, 10) * f.values()(10, 10));
    c.push_back(f.values()(10, 10) * f.values()(42, 10));  // lag 0.5
  }
  const auto mv = oracle::mean_se(v), mc = oracle::mean_se(c);
  CHECK(std::abs(mv.mean - 1.0) < 3 * mv.se);
  CHECK(std::abs(mc.mean - 0.3679) < 3 * mc.se);
}

TEST_CASE("tiny scale is white noise") {
  const CirculantEmbedding emb(CovarianceModel::exponential(1.0, 0.001), Window(), {128, 128});
  CHECK(emb.iid());
  Rng rng(8);
  const Eigen::MatrixXd z = emb.sample(rng).values();
  double num = 0.0, den = 0.0;
  for (int i = 0; i + 1 < 128; ++i) {
    for (int j = 0; j < 128; ++j) {
      num += z(i, j) * z(i + 1, j);
      den += z(i, j) * z(i, j);
    }
  }
  CHECK(std::abs(num / den) < 0.05);
}

TEST_CASE("power pair") {
  const Window w;
  const CirculantEmbedding unit(CovarianceModel::exponential(1.0, 0.2), w, {32, 32});
  Rng bad(1);
  CHECK_THROWS_AS(simulate_power_pair(unit, 0.0, bad), ParameterError);
  for (double sigma : {2.0, 4.0}) {
    std::vector<double> xy, xx, yy;
    for (int rep = 0; rep < 2000; ++rep) {
      Rng rng = make_rng(9, rep);
      const auto [phi, psi] = simulate_power_pair(unit, sigma, rng);
      const double a = phi.values()(5, 7), b = psi.values()(5, 7);
      xy.push_back(a * b);
      xx.push_back(a * a);
      yy.push_back(b * b);
    }
    const auto mxy = oracle::mean_se(xy), mxx = oracle::mean_se(xx), myy = oracle::mean_se(yy);
    CHECK(std::abs(mxx.mean - 1.0) < 3 * mxx.se);
    CHECK(std::abs(myy.mean - (1.0 + sigma * sigma)) < 3 * myy.se);
    // E[Φ Ψ] = 1 so the correlation is 1 / sqrt(1 + σ²).
    CHECK(std::abs(mxy.mean - 1.0) < 3 * mxy.se);
    const double corr = mxy.mean / std::sqrt(mxx.mean * myy.mean);
    CHECK(corr == doctest::Approx(1.0 / std::sqrt(1.0 + sigma * sigma)).epsilon(0.1));
  }
}

TEST_CASE("binomial design") {
  Rng rng(10);
  CHECK_THROWS_AS(draw_binomial_design(1, Window(), rng), ParameterError);
  const Window w(1, 2, 3, 5);
  const SampleDesign d = draw_binomial_design(100, w, rng);
  CHECK(d.size() == 100);
  CHECK(d.type == DesignType::binomial);
  for (const auto& p : d.locations) CHECK(w.contains(p));
  std::vector<double> xs;
  for (int rep = 0; rep < 50; ++rep) {
    for (const auto& p : draw_binomial_design(100, w, rng).locations) xs.push_back(p.x());
  }
  const auto m = oracle::mean_se(xs);
  CHECK(std::abs(m.mean - 2.0) < 3 * m.se);
}

TEST_CASE("field lookup") {
  const Window w;
  Eigen::MatrixXd v(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) v(i, j) = 10 * i + j;
  const FieldRaster r(w, v);
  CHECK(r.at(r.cell_center(2, 3)) == 23.0);
  CHECK(r.at({1.0, 1.0}) == 33.0);
  const Eigen::VectorXd vals = read_field(r, std::vector<Point>{{0.1, 0.1}, {0.6, 0.3}});
  CHECK(vals(0) == 0.0);
  CHECK(vals(1) == 21.0);

  const FieldRaster cst(w, Eigen::MatrixXd::Constant(8, 8, 3.5));
  Rng rng(2);
  const SampleDesign d = draw_binomial_design(50, w, rng);
  CHECK((read_field(cst, d).array() == 3.5).all());

  try {
    read_field(r, std::vector<Point>{{0.5, 0.5}, {1.5, 0.5}});
    FAIL("expected lookup error");
  } catch (const LookupError& e) {
    CHECK(e.index() == 1);
  }

  const FieldRaster g = simulate_grf(CovarianceModel::exponential(1.0, 0.1), w, {32, 32}, rng);
  const FieldRaster wrapped = torus_shift(g, ShiftVector{{1.0, 0.0}, false}, w);
  CHECK((read_field(wrapped, d).array() == read_field(g, d).array()).all());
}

TEST_CASE("raster round trips") {
  Rng rng(4);
  const Window w(0, 0, 2, 1);
  const FieldRaster f = simulate_grf(CovarianceModel::exponential(1.0, 0.1), w, {16, 8}, rng);
  const std::string txt = temp_path("r.txt"), csv = temp_path("r.csv");
  write_raster_text(f, txt);
  const FieldRaster a = read_raster_text(txt);
  CHECK(a.window() == w);
  CHECK(a.nx() == 16);
  CHECK(a.ny() == 8);
  CHECK((a.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
  write_raster_csv(f, csv);
  const FieldRaster b = read_raster_csv(csv);
  CHECK(b.nx() == 16);
  CHECK(b.ny() == 8);
  CHECK(b.window().x_max() == doctest::Approx(2.0));
  CHECK((b.values() - f.values()).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(txt);
  std::filesystem::remove(csv);
  CHECK_THROWS_AS(read_raster_text(temp_path("missing.txt")), FormatError);
}
