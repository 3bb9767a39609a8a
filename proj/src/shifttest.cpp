#include "rshift/shifttest.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <regex>

#include "json.hpp"
#include "rshift/parallel.hpp"
#include "rshift/summaries.hpp"

namespace rshift {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::torus: return "torus";
    case Strategy::minus: return "minus";
    case Strategy::var_count: return "var-count";
    case Strategy::var_exact: return "var-exact";
    case Strategy::var_kernel: return "var-kernel";
    case Strategy::var_theorem2: return "var-theorem2";
  }
  return "unknown";
}

std::string to_string(StatisticKind s) {
  switch (s) {
    case StatisticKind::covariance: return "covariance";
    case StatisticKind::cross_k: return "cross-K";
    case StatisticKind::mean_nn: return "E-D12";
  }
  return "unknown";
}

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two-sided";
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
  }
  return "unknown";
}

Alternative parse_alternative(const std::string& s) {
  if (s == "two-sided" || s == "two_sided") return Alternative::two_sided;
  if (s == "greater") return Alternative::greater;
  if (s == "less") return Alternative::less;
  throw ParameterError("unknown alternative '" + s + "' (expected two-sided, greater or less)");
}

ShiftVector ShiftLaw::draw(Rng& rng) const {
  return kind == Kind::disk ? draw_shift_disk(rng, radius) : draw_shift_rect(rng, half_x, half_y);
}

std::string StrategyConfig::method_name() const {
  std::string prefix = "RS_";
  if (statistic == StatisticKind::cross_k) prefix += "K,";
  if (statistic == StatisticKind::mean_nn) prefix += "G,";
  switch (strategy) {
    case Strategy::torus: return prefix + "torus";
    case Strategy::minus: return prefix + "minus";
    case Strategy::var_count: return prefix + "count";
    case Strategy::var_exact:
    case Strategy::var_theorem2: return prefix + "var";
    case Strategy::var_kernel: return prefix + fmt::format("ker({:g})", bandwidth);
  }
  return prefix;
}

namespace {

bool combination_allowed(Strategy s, StatisticKind k) {
  switch (k) {
    case StatisticKind::covariance: return s != Strategy::var_theorem2;
    case StatisticKind::cross_k: return s == Strategy::torus || s == Strategy::minus || s == Strategy::var_kernel ||
                                        s == Strategy::var_theorem2;
    case StatisticKind::mean_nn: return s == Strategy::torus || s == Strategy::minus || s == Strategy::var_kernel;
  }
  return false;
}

bool is_variance(Strategy s) { return s != Strategy::torus && s != Strategy::minus; }

}  // namespace

void StrategyConfig::validate(const Window& w) const {
  if (n_shifts < 19) throw ParameterError("number of shifts N must be at least 19");
  if (!combination_allowed(strategy, statistic)) {
    throw ParameterError("strategy " + to_string(strategy) + " is not defined for statistic " + to_string(statistic));
  }
  if (law.kind == ShiftLaw::Kind::disk && !(law.radius > 0.0)) throw ParameterError("shift disk radius must be positive");
  if (law.kind == ShiftLaw::Kind::rect && (!(law.half_x > 0.0) || !(law.half_y > 0.0))) {
    throw ParameterError("shift rectangle half-widths must be positive");
  }
  if (max_redraws < 0) throw ParameterError("max_redraws must be non-negative");
  if (strategy == Strategy::minus) {
    erode(w, margin_x, margin_y);
    const double tol = 1e-12 * w.diameter();
    if (law.reach_x() > margin_x + tol || law.reach_y() > margin_y + tol) {
      throw ParameterError("minus strategy: shift law reaches beyond the erosion margins, so W_c - v may leave W");
    }
  }
  if (is_variance(strategy) && (law.reach_x() >= w.width() && law.reach_y() >= w.height())) {
    throw ParameterError("shift law can move the window entirely off itself");
  }
  if (strategy == Strategy::var_kernel) KernelSpec{KernelFamily::epanechnikov, bandwidth}.validate();
  if (strategy == Strategy::var_theorem2) {
    if (mc_points < 100000) throw ParameterError("Theorem-2 integration needs at least 1e5 Monte Carlo points");
    if (law.reach_x() >= w.width() || law.reach_y() >= w.height()) {
      throw ParameterError("Theorem-2 variance needs shifts shorter than the window sides");
    }
  }
  if (r_grid.size() > 0) {
    if (!(r_grid(0) > 0.0)) throw ParameterError("r-grid values must be positive");
    for (Eigen::Index j = 1; j < r_grid.size(); ++j) {
      if (!(r_grid(j) > r_grid(j - 1))) throw ParameterError("r-grid must be strictly increasing");
    }
  }
}

StrategyConfig parse_method(const std::string& raw) {
  std::string name;
  for (char c : raw) {
    if (c != ' ' && c != '{' && c != '}') name += c;
  }
  static const std::regex re(R"(^RS_(?:([KG]),)?(torus|minus|count|var|ker)(?:\(([0-9.eE+-]+)\))?$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) throw ParameterError("unknown method '" + raw + "'");
  StrategyConfig cfg;
  const std::string stat = m[1].str();
  const std::string kind = m[2].str();
  cfg.statistic = stat.empty() ? StatisticKind::covariance : stat == "K" ? StatisticKind::cross_k : StatisticKind::mean_nn;
  if (kind == "torus") cfg.strategy = Strategy::torus;
  if (kind == "minus") cfg.strategy = Strategy::minus;
  if (kind == "count") cfg.strategy = Strategy::var_count;
  if (kind == "ker") cfg.strategy = Strategy::var_kernel;
  if (kind == "var") cfg.strategy = cfg.statistic == StatisticKind::cross_k ? Strategy::var_theorem2 : Strategy::var_exact;
  if (m[3].matched) {
    if (cfg.strategy != Strategy::var_kernel) throw ParameterError("only the kernel method takes a bandwidth: '" + raw + "'");
    try {
      cfg.bandwidth = std::stod(m[3].str());
    } catch (const std::exception&) {
      throw ParameterError("bad bandwidth in '" + raw + "'");
    }
  }
  if (!combination_allowed(cfg.strategy, cfg.statistic)) throw ParameterError("unknown method '" + raw + "'");
  if (cfg.strategy == Strategy::minus) cfg.law = ShiftLaw::rect(1.0 / 3, 1.0 / 3);
  return cfg;
}

const Window& data_window(const TestData& data) {
  return std::visit(
      [](const auto& d) -> const Window& {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, FieldData>) {
          return d.phi.window();
        } else {
          return d.phi.window;
        }
      },
      data);
}

namespace {

struct Evaluated {
  Eigen::RowVectorXd value;
  std::size_t n = 0;
  double exact_var = 0.0;  // var_exact only
};

// Raster value at p, tolerating round-off just outside the window.
double read_at(const FieldRaster& raster, Point p, std::size_t index) {
  double out = 0.0;
  if (raster.lookup(p, out)) return out;
  const Window& w = raster.window();
  const double tol = 1e-9 * w.diameter();
  const Point q(std::clamp(p.x(), w.x_min(), w.x_max()), std::clamp(p.y(), w.y_min(), w.y_max()));
  if ((q - p).norm() <= tol && raster.lookup(q, out)) return out;
  throw LookupError(fmt::format("shifted location ({}, {}) outside the raster window", p.x(), p.y()), index);
}

void check_data(const TestData& data, const StrategyConfig& cfg) {
  const bool fields = std::holds_alternative<FieldData>(data);
  if (fields != (cfg.statistic == StatisticKind::covariance)) {
    throw KindMismatchError(cfg.method_name() + " needs " + (fields ? "point patterns" : "field data"));
  }
  if (fields) {
    const auto& d = std::get<FieldData>(data);
    if (!(d.phi.window() == d.psi.window())) throw WindowMismatchError("the two rasters cover different windows");
    if (d.design.size() < 2) throw ParameterError("sampling design needs at least 2 locations");
    for (const auto& x : d.design.locations) {
      if (!d.phi.window().contains(x)) throw ParameterError("sampling location outside the raster window");
    }
  } else {
    const auto& d = std::get<PatternData>(data);
    if (!(d.phi.window == d.psi.window)) throw WindowMismatchError("the two patterns have different windows");
    d.phi.validate();
    d.psi.validate();
  }
}

Eigen::VectorXd effective_r_grid(const StrategyConfig& cfg, const Window& w) {
  return cfg.r_grid.size() > 0 ? cfg.r_grid : default_r_grid(w);
}

struct Models {
  CovarianceModel phi, psi;
};

// Statistic of Φ restricted to `domain` against Ψ read at x - v (wrapped on the torus when `wrap`).
Evaluated eval_fields(const FieldData& d, const Window& domain, const ShiftVector& v, bool wrap, std::size_t index,
                      const Models* exact) {
  std::vector<Point> locs;
  for (const auto& x : d.design.locations) {
    if (domain.contains(x)) locs.push_back(x);
  }
  if (locs.size() < 2) throw StatisticUndefined("fewer than 2 sampling locations in the domain");
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::VectorXd a(n), b(n);
  const Window& w = d.psi.window();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point& x = locs[static_cast<std::size_t>(j)];
    a(j) = read_at(d.phi, x, index);
    const Point y = x - v.offset;
    b(j) = read_at(d.psi, wrap ? torus_wrap(y, w) : y, index);
  }
  Evaluated e;
  e.value.resize(1);
  e.value(0) = sample_covariance(a, b).value;
  e.n = locs.size();
  if (exact) e.exact_var = var_theorem1(locs, exact->phi, exact->psi);
  return e;
}

Evaluated eval_patterns(const PointPattern& phi, const PointPattern& psi, const Window& domain,
                        const StrategyConfig& cfg, const Eigen::VectorXd& r) {
  Evaluated e;
  e.n = phi.size();
  if (cfg.statistic == StatisticKind::cross_k) {
    e.value = cross_k(phi, psi, domain, r).values.transpose();
  } else {
    e.value.resize(1);
    e.value(0) = mean_cross_nn(phi, psi, domain, r).value;
  }
  return e;
}

// Entry 0 from the unshifted data, entries 1..N from shifts drawn with per-index streams.
template <class Eval>
TestStatisticSeries build_series(const StrategyConfig& cfg, std::uint64_t seed, const Window& w, bool area_check,
                                 const Eigen::VectorXd& r, Eval&& eval) {
  const std::size_t total = cfg.n_shifts + 1;
  std::vector<Evaluated> rows(total);
  std::vector<ShiftVector> shifts(total);
  std::vector<double> areas(total);
  std::vector<std::size_t> redraws(total, 0);

  shifts[0] = ShiftVector::zero();
  rows[0] = eval(shifts[0], std::size_t{0});
  areas[0] = area_check ? w.area() : 0.0;

  parallel_for(cfg.n_shifts, cfg.workers, [&](std::size_t k) {
    const std::size_t idx = k + 1;
    Rng rng = make_rng(seed, idx);
    for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
      const ShiftVector v = cfg.law.draw(rng);
      if (area_check && set_covariance(w, v.offset) < cfg.min_area_fraction * w.area()) {
        ++redraws[idx];
        continue;
      }
      try {
        rows[idx] = eval(v, idx);
      } catch (const StatisticUndefined&) {
        ++redraws[idx];
        continue;
      }
      shifts[idx] = v;
      areas[idx] = area_check ? set_covariance(w, v.offset) : 0.0;
      return;
    }
    throw StatisticUndefined(fmt::format("statistic undefined for shift {} after {} redraws", idx, cfg.max_redraws));
  });

  TestStatisticSeries s;
  const auto cols = rows[0].value.size();
  s.functional = cfg.statistic == StatisticKind::cross_k;
  if (s.functional) s.r = r;
  s.values.resize(static_cast<Eigen::Index>(total), cols);
  for (std::size_t i = 0; i < total; ++i) {
    s.values.row(static_cast<Eigen::Index>(i)) = rows[i].value;
    s.support.push_back(rows[i].n);
  }
  s.shifts = std::move(shifts);
  s.area = std::move(areas);
  for (auto c : redraws) s.n_redraws += c;
  if (s.n_redraws > 0) spdlog::debug("{}: {} shift redraws", cfg.method_name(), s.n_redraws);
  return s;
}

}  // namespace

TestStatisticSeries run_torus(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed) {
  const Window& w = data_window(data);
  check_data(data, cfg);
  const Eigen::VectorXd r = effective_r_grid(cfg, w);
  TestStatisticSeries s;
  if (const auto* d = std::get_if<FieldData>(&data)) {
    s = build_series(cfg, seed, w, false, r, [&](const ShiftVector& v, std::size_t i) {
      return eval_fields(*d, w, v, true, i, nullptr);
    });
  } else {
    const auto& p = std::get<PatternData>(data);
    s = build_series(cfg, seed, w, false, r, [&](const ShiftVector& v, std::size_t) {
      return eval_patterns(p.phi, v.origin ? p.psi : torus_shift(p.psi, v, w), w, cfg, r);
    });
  }
  std::fill(s.area.begin(), s.area.end(), w.area());
  return s;
}

TestStatisticSeries run_minus(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed) {
  const Window& w = data_window(data);
  check_data(data, cfg);
  cfg.validate(w);
  const Window wc = erode(w, cfg.margin_x, cfg.margin_y);
  const Eigen::VectorXd r = effective_r_grid(cfg, w);
  TestStatisticSeries s;
  if (const auto* d = std::get_if<FieldData>(&data)) {
    s = build_series(cfg, seed, w, false, r, [&](const ShiftVector& v, std::size_t i) {
      return eval_fields(*d, wc, v, false, i, nullptr);
    });
  } else {
    const auto& p = std::get<PatternData>(data);
    const PointPattern phi_c = p.phi.restricted(wc);
    s = build_series(cfg, seed, w, false, r, [&](const ShiftVector& v, std::size_t) {
      return eval_patterns(phi_c, p.psi.translated(v.offset).restricted(wc), wc, cfg, r);
    });
  }
  std::fill(s.area.begin(), s.area.end(), wc.area());
  return s;
}

TestStatisticSeries run_variance(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed) {
  const Window& w = data_window(data);
  check_data(data, cfg);
  cfg.validate(w);
  const Eigen::VectorXd r = effective_r_grid(cfg, w);
  TestStatisticSeries s;
  Eigen::VectorXd exact_var;
  if (const auto* d = std::get_if<FieldData>(&data)) {
    std::optional<Models> models;
    if (cfg.strategy == Strategy::var_exact) {
      const double max_lag = cfg.variogram_max_lag > 0.0 ? cfg.variogram_max_lag
                                                          : 0.5 * std::max(w.width(), w.height());
      const auto& x = d->design.locations;
      const VariogramFit fp = fit_exponential_variogram(x, read_field(d->phi, x), max_lag, cfg.variogram_bins);
      const VariogramFit fq = fit_exponential_variogram(x, read_field(d->psi, x), max_lag, cfg.variogram_bins);
      models = Models{fp.covariance(cfg.covariance_truncation), fq.covariance(cfg.covariance_truncation)};
    }
    const Models* exact = models ? &*models : nullptr;
    std::vector<double> ev(cfg.n_shifts + 1, 0.0);
    s = build_series(cfg, seed, w, true, r, [&](const ShiftVector& v, std::size_t i) {
      const Window wi = intersect_shifted(w, v, i).intersection;
      Evaluated e = eval_fields(*d, wi, v, false, i, exact);
      ev[i] = e.exact_var;
      return e;
    });
    exact_var = Eigen::Map<Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  } else {
    const auto& p = std::get<PatternData>(data);
    s = build_series(cfg, seed, w, true, r, [&](const ShiftVector& v, std::size_t i) {
      const Window wi = intersect_shifted(w, v, i).intersection;
      return eval_patterns(p.phi.restricted(wi), p.psi.translated(v.offset).restricted(wi), wi, cfg, r);
    });
  }

  VarianceEstimate est;
  switch (cfg.strategy) {
    case Strategy::var_count:
      est = var_count(s);
      break;
    case Strategy::var_exact:
      est.method = VarianceMethod::exact;
      est.var = exact_var;
      break;
    case Strategy::var_kernel:
      est = var_kernel(s, KernelSpec{KernelFamily::epanechnikov, cfg.bandwidth});
      break;
    case Strategy::var_theorem2: {
      const auto& p = std::get<PatternData>(data);
      std::shared_ptr<const Theorem2Surface> surface = cfg.surface;
      if (!surface) {
        surface = std::make_shared<Theorem2Surface>(cfg.g1, cfg.g2, w, std::max(cfg.law.reach_x(), cfg.law.reach_y()), r,
                                                    cfg.surface_nodes, cfg.mc_points, derive_seed(seed, ~0ULL),
                                                    cfg.workers);
      } else if (surface->r().size() != r.size() || !(surface->r() - r).isZero(1e-12)) {
        throw ParameterError("Theorem-2 surface was built for a different r-grid");
      }
      const double l1 = p.phi.intensity();
      const double l2 = p.psi.intensity();
      if (!(l1 > 0.0) || !(l2 > 0.0)) throw StatisticUndefined("Theorem-2 variance needs non-empty patterns");
      est.method = VarianceMethod::theorem2;
      est.var.resize(s.values.rows(), s.values.cols());
      for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        const ShiftVector& v = s.shifts[static_cast<std::size_t>(i)];
        const Window wi = intersect_shifted(w, v, static_cast<std::size_t>(i)).intersection;
        const Eigen::VectorXd ratio = surface->ratio_variance(l1, l2, wi.width(), wi.height());
        for (Eigen::Index j = 0; j < r.size(); ++j) {
          const double c = edge_factor_c(wi, r(j));
          est.var(i, j) = c * c * ratio(j);
        }
      }
      break;
    }
    default:
      throw ParameterError("run_variance needs a variance strategy");
  }
  s.standardized = standardize(s, est);
  return s;
}

double mc_pvalue(const Eigen::VectorXd& s, Alternative alternative) {
  if (s.size() < 2) throw ParameterError("p-value needs at least one shifted value");
  const double s0 = s(0);
  const auto tail = s.tail(s.size() - 1).array();
  const double np1 = static_cast<double>(s.size());
  const double p_hi = (1.0 + static_cast<double>((tail >= s0).count())) / np1;
  const double p_lo = (1.0 + static_cast<double>((tail <= s0).count())) / np1;
  switch (alternative) {
    case Alternative::greater: return p_hi;
    case Alternative::less: return p_lo;
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(p_hi, p_lo));
  }
  return 1.0;
}

TestResult mc_pvalue_scalar(const TestStatisticSeries& series, Alternative alternative) {
  if (series.functional) throw ParameterError("scalar p-value requested for a functional series");
  TestResult r;
  r.p_value = mc_pvalue(series.ranked_values().col(0), alternative);
  r.n_shifts = series.shifts_count();
  r.n_redraws = series.n_redraws;
  r.alternative = to_string(alternative);
  r.observed = series.values(0, 0);
  return r;
}

TestResult global_envelope_erl(const TestStatisticSeries& series, double alpha) {
  if (!series.functional) throw ParameterError("global envelope needs a functional series");
  if (series.r.size() != series.values.cols()) throw ParameterError("series r-grid does not match its curves");
  const Eigen::MatrixXd& curves = series.ranked_values();
  const ErlResult erl = erl_test(curves, alpha);
  TestResult r;
  r.p_value = erl.p_value;
  r.n_shifts = series.shifts_count();
  r.n_redraws = series.n_redraws;
  r.envelope = Envelope{series.r, erl.lo, erl.hi, curves.row(0).transpose(), series.standardized.has_value()};
  return r;
}

TestResult run_test(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed) {
  const Window& w = data_window(data);
  cfg.validate(w);
  check_data(data, cfg);
  TestStatisticSeries series;
  switch (cfg.strategy) {
    case Strategy::torus: series = run_torus(data, cfg, seed); break;
    case Strategy::minus: series = run_minus(data, cfg, seed); break;
    default: series = run_variance(data, cfg, seed); break;
  }
  TestResult result = series.functional ? global_envelope_erl(series) : mc_pvalue_scalar(series, cfg.alternative);
  if (series.functional) result.alternative = "two-sided";
  result.method = cfg.method_name();
  result.strategy = to_string(cfg.strategy);
  result.statistic = to_string(cfg.statistic);
  result.seed = seed;
  if (is_variance(cfg.strategy)) {
    const VarianceMethod vm = cfg.strategy == Strategy::var_count    ? VarianceMethod::count
                              : cfg.strategy == Strategy::var_exact  ? VarianceMethod::exact
                              : cfg.strategy == Strategy::var_kernel ? VarianceMethod::kernel
                                                                     : VarianceMethod::theorem2;
    result.variance_method = to_string(vm);
  }
  return result;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_json(const TestResult& r) {
  nlohmann::json j;
  j["p_value"] = r.p_value;
  j["method"] = r.method;
  j["strategy"] = r.strategy;
  j["statistic"] = r.statistic;
  j["N"] = r.n_shifts;
  j["seed"] = r.seed;
  j["n_redraws"] = r.n_redraws;
  j["alternative"] = r.alternative;
  j["variance_method"] = r.variance_method.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.variance_method);
  if (r.envelope) {
    j["observed"] = nullptr;
    j["envelope"] = {{"r", vec_json(r.envelope->r)},
                     {"lo", vec_json(r.envelope->lo)},
                     {"hi", vec_json(r.envelope->hi)},
                     {"observed", vec_json(r.envelope->observed)},
                     {"standardized", r.envelope->standardized}};
  } else {
    j["observed"] = r.observed;
    j["envelope"] = nullptr;
  }
  return j.dump(2) + "\n";
}

TestResult test_result_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    TestResult r;
    r.p_value = j.at("p_value").get<double>();
    r.method = j.value("method", "");
    r.strategy = j.at("strategy").get<std::string>();
    r.statistic = j.at("statistic").get<std::string>();
    r.n_shifts = j.at("N").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n_redraws = j.at("n_redraws").get<std::size_t>();
    r.alternative = j.value("alternative", "two-sided");
    if (j.contains("variance_method") && j["variance_method"].is_string()) r.variance_method = j["variance_method"];
    if (j.contains("observed") && j["observed"].is_number()) r.observed = j["observed"];
    if (j.contains("envelope") && j["envelope"].is_object()) {
      const auto& e = j["envelope"];
      r.envelope = Envelope{json_vec(e.at("r")), json_vec(e.at("lo")), json_vec(e.at("hi")),
                            json_vec(e.at("observed")), e.value("standardized", false)};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed test result JSON: ") + e.what());
  }
}

}  // namespace rshift
