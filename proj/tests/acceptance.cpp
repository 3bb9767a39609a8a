// Reproduction checks at desk scale: R = 300 replicates, N = 499 shifts.
// Prints one line per criterion and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "rshift/harness.hpp"
#include "rshift/io.hpp"
#include "rshift/pointsim.hpp"
#include "rshift/summaries.hpp"
#include "rshift/svg.hpp"
#include "rshift/theorem2.hpp"
#include "rshift/variance.hpp"

using namespace rshift;
using std::numbers::pi;

namespace {

constexpr std::size_t kR = 300;
constexpr std::size_t kN = 499;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string out_dir;
unsigned workers = 1;

ExperimentRun experiment(const std::string& stem, std::vector<std::string> models, std::vector<std::string> methods,
                         std::uint64_t seed) {
  ExperimentSpec spec;
  spec.models = std::move(models);
  spec.methods = std::move(methods);
  spec.replications = kR;
  spec.n_shifts = kN;
  spec.seed = seed;
  spec.workers = workers;
  spec.validate();
  ExperimentRun run = run_experiment(spec);
  emit_table(run, spec, out_dir, stem);
  return run;
}

bool in_band(double rate, double paper) {
  const Interval b = acceptance_band(paper, kR);
  return rate >= b.lo && rate <= b.hi;
}

std::string band_text(double rate, double paper) {
  const Interval b = acceptance_band(paper, kR);
  return fmt::format("{:.3f} in [{:.3f}, {:.3f}]", rate, b.lo, b.hi);
}

double rate_se(double p) { return std::sqrt(p * (1.0 - p) / static_cast<double>(kR)); }

std::vector<double> defined(const std::vector<double>& p) {
  std::vector<double> out;
  for (double v : p) {
    if (!std::isnan(v)) out.push_back(v);
  }
  return out;
}

double share_at_most(const std::vector<double>& p, double x) {
  double n = 0.0;
  for (double v : p) n += v <= x ? 1.0 : 0.0;
  return n / static_cast<double>(p.size());
}

// ---- table criteria ----

ExperimentRun null_05;

Outcome c1() {
  const auto run = experiment("rf_null_0.001", {"RF-null(0.001)"}, {"RS_torus", "RS_minus", "RS_count"}, 101);
  Outcome o{true, ""};
  for (const char* m : {"RS_torus", "RS_minus", "RS_count"}) {
    const double rate = run.table.row("RF-null(0.001)", m).rate;
    o.pass = o.pass && in_band(rate, 0.05);
    o.detail += fmt::format("{} {}; ", m, band_text(rate, 0.05));
  }
  return o;
}

Outcome c2() {
  null_05 = experiment("rf_null_0.5", {"RF-null(0.5)"}, {"RS_torus", "RS_minus", "RS_count", "RS_var"}, 102);
  const auto& t = null_05.table;
  const double torus = t.row("RF-null(0.5)", "RS_torus").rate;
  const double count = t.row("RF-null(0.5)", "RS_count").rate;
  const double var = t.row("RF-null(0.5)", "RS_var").rate;
  return {torus > 0.08 && in_band(count, 0.069) && var <= 0.05,
          fmt::format("RS_torus {:.3f} > 0.08; RS_count {}; RS_var {:.3f} <= 0.05", torus, band_text(count, 0.069), var)};
}

Outcome c3() {
  const std::string model = "RF-power(2,0.5)";
  const auto run = experiment("rf_power_2_0.5", {model}, {"RS_count", "RS_var", "RS_minus"}, 103);
  const double count = run.table.row(model, "RS_count").rate;
  const double var = run.table.row(model, "RS_var").rate;
  const double minus = run.table.row(model, "RS_minus").rate;
  const double gap1 = 2.0 * std::hypot(rate_se(count), rate_se(var));
  const double gap2 = 2.0 * std::hypot(rate_se(var), rate_se(minus));
  return {count - var > gap1 && var - minus > gap2,
          fmt::format("RS_count {:.3f} > RS_var {:.3f} > RS_minus {:.3f}; gaps {:.3f} (need {:.3f}), {:.3f} (need {:.3f})",
                      count, var, minus, count - var, gap1, var - minus, gap2)};
}

Outcome c4() {
  const auto run = experiment("s1", {"S1"}, {"RS_K,torus", "RS_G,torus"}, 104);
  const double k = run.table.row("S1", "RS_K,torus").rate;
  const double g = run.table.row("S1", "RS_G,torus").rate;
  return {in_band(k, 0.094) && in_band(g, 0.054),
          fmt::format("RS_K,torus {}; RS_G,torus {}", band_text(k, 0.094), band_text(g, 0.054))};
}

ExperimentRun s4;

Outcome c5() {
  s4 = experiment("s4", {"S4"}, {"RS_K,torus", "RS_G,torus", "RS_K,var"}, 105);
  const double k = s4.table.row("S4", "RS_K,torus").rate;
  const double g = s4.table.row("S4", "RS_G,torus").rate;
  return {in_band(k, 0.05) && in_band(g, 0.05),
          fmt::format("RS_K,torus {}; RS_G,torus {}", band_text(k, 0.05), band_text(g, 0.05))};
}

Outcome c6() {
  const auto run = experiment("p3", {"P3"}, {"RS_K,torus", "RS_G,torus"}, 106);
  const double k = run.table.row("P3", "RS_K,torus").rate;
  const double g = run.table.row("P3", "RS_G,torus").rate;
  return {k >= 0.95 && g >= 0.80, fmt::format("RS_K,torus {:.3f} >= 0.95; RS_G,torus {:.3f} >= 0.80", k, g)};
}

Outcome c7() {
  const auto& row = s4.table.row("S4", "RS_K,var");
  return {in_band(row.rate, 0.047), fmt::format("RS_K,var {} ({} undefined)", band_text(row.rate, 0.047), row.undefined)};
}

// ---- property criteria ----

Outcome c8() {
  double worst = 0.0;
  for (int config = 0; config < 50; ++config) {
    Rng rng = make_rng(108, config);
    const int n = 10 + static_cast<int>(uniform01(rng) * 490);
    const double radius = uniform(rng, 0.05, 2.0);
    const double h = uniform(rng, 0.01, 0.5);
    std::vector<ShiftVector> v{ShiftVector::zero()};
    for (int i = 0; i < n; ++i) v.push_back(config % 2 ? draw_shift_disk(rng, radius) : draw_shift_rect(rng, radius));
    const Eigen::MatrixXd w = kernel_weights(v, KernelSpec{KernelFamily::epanechnikov, h});
    worst = std::max(worst, (w.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return {worst <= 1e-12, fmt::format("max |row sum - 1| = {:.2e} over 50 configurations", worst)};
}

Outcome c9() {
  const Window w;
  Rng rng(109);
  double worst_g = 0.0, worst_gb = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double r = 0.05 * k;
    const auto big = oracle::big_gamma_mc(w, r, 1000000, rng);
    const auto bar = oracle::gamma_bar_mc(w, r, 1000000, rng);
    worst_g = std::max(worst_g, std::abs(big_gamma(w, r) / big.mean - 1.0));
    worst_gb = std::max(worst_gb, std::abs(set_covariance_gamma(w, r) / bar.mean - 1.0));
  }
  return {worst_g <= 0.01 && worst_gb <= 0.01,
          fmt::format("max relative error: Gamma {:.4f}, gamma-bar {:.4f} (r = 0.05 .. 0.5)", worst_g, worst_gb)};
}

Outcome c10() {
  const Window w;
  Eigen::VectorXd r(3);
  r << 0.05, 0.10, 0.15;
  std::vector<std::vector<double>> k(3);
  for (int rep = 0; rep < 500; ++rep) {
    Rng rng = make_rng(110, rep);
    const auto a = sim_poisson(150, w, rng);
    const auto b = sim_poisson(150, w, rng);
    const FunctionalStatistic f = cross_k(a, b, w, r);
    for (int j = 0; j < 3; ++j) k[j].push_back(f.values(j));
  }
  Outcome o{true, ""};
  for (int j = 0; j < 3; ++j) {
    const auto m = oracle::mean_se(k[j]);
    const double z = (m.mean - pi * r(j) * r(j)) / m.se;
    o.pass = o.pass && std::abs(z) < 3.0;
    o.detail += fmt::format("r = {:.2f}: z = {:+.2f}; ", r(j), z);
  }
  return o;
}

Outcome c11() {
  const Window w;
  const auto model = CovarianceModel::exponential(1.0, 0.1);
  const CirculantEmbedding emb(model, w, {128, 128});
  Rng drng(111);
  const SampleDesign x = draw_binomial_design(100, w, drng);
  std::vector<double> s;
  for (int rep = 0; rep < 2000; ++rep) {
    Rng r = make_rng(112, rep);
    const auto [phi, psi] = emb.sample_pair(r);
    s.push_back(sample_covariance(read_field(phi, x), read_field(psi, x)).value);
  }
  const double formula = var_theorem1(x.locations, model, model);
  const double empirical = oracle::sample_var(s);
  const double rel = empirical / formula - 1.0;
  return {std::abs(rel) < 0.2, fmt::format("formula {:.5f}, empirical {:.5f}, relative {:+.3f}", formula, empirical, rel)};
}

Outcome c12() {
  const Window w;
  const double lambda = 150.0, r = 0.05;
  const auto poisson = PairCorrelation::poisson();
  Rng rng(113);
  const Theorem2Moments m = theorem2_moments(lambda, lambda, poisson, poisson, r, w, 200000, rng);
  const auto g = oracle::big_gamma_mc(w, r, 1000000, rng);
  const double z_mu = (m.mu_r - lambda * lambda * g.mean) / (lambda * lambda * g.se);

  std::vector<double> rs, ss;
  for (int rep = 0; rep < 4000; ++rep) {
    Rng sim = make_rng(114, rep);
    const auto a = sim_poisson(lambda, w, sim);
    const auto b = sim_poisson(lambda, w, sim);
    rs.push_back(oracle::pair_count(a.points, b.points, r));
    ss.push_back(static_cast<double>(a.size()) * static_cast<double>(b.size()));
  }
  const auto mr = oracle::mean_se(rs);
  const auto vr = oracle::variance_se(rs);
  const auto ms = oracle::mean_se(ss);
  const auto vs = oracle::variance_se(ss);
  const double z_er = (mr.mean - m.mu_r) / mr.se;
  const double z_vr = (vr.mean - m.var_r) / std::hypot(vr.se, m.se_var_r);
  const double z_es = (ms.mean - m.mu_s) / ms.se;
  const double z_vs = (vs.mean - m.var_s) / vs.se;
  const bool pass = std::abs(z_mu) < 3 && std::abs(z_er) < 3 && std::abs(z_vr) < 3 && std::abs(z_es) < 3 &&
                    std::abs(z_vs) < 3;
  return {pass, fmt::format("z: mu_R vs Gamma {:+.2f}; E R {:+.2f}; var R {:+.2f}; E S {:+.2f}; var S {:+.2f}", z_mu, z_er,
                            z_vr, z_es, z_vs)};
}

Outcome c13() {
  const auto p = defined(null_05.pvalues.at({"RF-null(0.5)", "RS_minus"}));
  const auto [d, pv] = ks_uniform(p);
  return {pv >= 0.01 && p.size() == kR,
          fmt::format("RS_minus on RF-null(0.5): KS D = {:.4f}, p = {:.3f} over {} replicates", d, pv, p.size())};
}

Outcome c14() {
  ExperimentSpec fields;
  fields.models = {"RF-null(0.1)", "RF-power(2,0.2)"};
  fields.methods = {"RS_torus", "RS_count", "RS_var", "RS_ker(0.1)"};
  ExperimentSpec points;
  points.models = {"S4", "S1"};
  points.methods = {"RS_K,torus", "RS_K,ker(0.1)", "RS_K,var", "RS_G,minus"};
  std::vector<std::string> tables;
  for (unsigned wk : {1u, 2u, 4u}) {
    std::string text;
    for (ExperimentSpec spec : {fields, points}) {
      spec.replications = 50;
      spec.n_shifts = 99;
      spec.seed = 115;
      spec.surface_nodes = 3;
      spec.workers = wk;
      const ExperimentRun run = run_experiment(spec);
      text += table_csv(run.table);
      for (const auto& [key, p] : run.pvalues) {
        for (double v : p) text += fmt::format("{},{},{}\n", key.first, key.second, v);
      }
    }
    tables.push_back(std::move(text));
  }
  const bool same = tables[0] == tables[1] && tables[0] == tables[2];
  return {same, fmt::format("workers 1, 2, 4: tables and p-values {}", same ? "byte-identical" : "differ")};
}

Outcome c15() {
  const auto torus = defined(null_05.pvalues.at({"RF-null(0.5)", "RS_torus"}));
  const auto count = defined(null_05.pvalues.at({"RF-null(0.5)", "RS_count"}));
  const auto var = defined(null_05.pvalues.at({"RF-null(0.5)", "RS_var"}));
  write_file_atomic(out_dir + "/figure1_pvalues.svg",
                    pvalue_histogram_svg({{"RS_torus", torus}, {"RS_count", count}, {"RS_var", var}}, 20));
  const double se = std::sqrt(0.1 * 0.9 / static_cast<double>(kR));
  const double pt = share_at_most(torus, 0.1);
  const double pc = share_at_most(count, 0.1);
  return {pt - 0.1 > 2 * se && std::abs(pc - 0.1) <= 2 * se,
          fmt::format("P(p <= 0.1): RS_torus {:.3f} (need > {:.3f}), RS_count {:.3f} (need within {:.3f} of 0.1)", pt,
                      0.1 + 2 * se, pc, 2 * se)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale reproduction checks"};
  out_dir = "acceptance_artifacts";
  app.add_option("--out", out_dir, "directory for tables and figures");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  std::filesystem::create_directories(out_dir);

  const std::vector<std::function<Outcome()>> criteria{c1, c2,  c3,  c4,  c5,  c6,  c7, c8,
                                                       c9, c10, c11, c12, c13, c14, c15};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu: %s  %s [%.0f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
