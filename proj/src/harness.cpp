#include "rshift/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "rshift/io.hpp"
#include "rshift/parallel.hpp"
#include "rshift/summaries.hpp"

namespace rshift {

namespace {

// Stable 64-bit FNV-1a, so seeds do not depend on row order or the standard library.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t point_count(const TestData& data, bool first) {
  if (const auto* p = std::get_if<PatternData>(&data)) return first ? p->phi.size() : p->psi.size();
  return 0;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (models.empty()) throw ParameterError("experiment needs at least one model");
  if (methods.empty()) throw ParameterError("experiment needs at least one method");
  if (replications < 50) throw ParameterError("experiment needs R >= 50 replications");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  if (!(shift_radius > 0.0)) throw ParameterError("shift_radius must be positive");
  if (!(minus_margin > 0.0 && minus_margin < 0.5)) throw ParameterError("minus_margin must lie in (0, 0.5)");
  if (model_options.design_n < 2) throw ParameterError("design_n must be at least 2");
  for (const auto& m : methods) strategy_for(m).validate(model_options.window);
}

StrategyConfig ExperimentSpec::strategy_for(const std::string& method) const {
  StrategyConfig cfg = parse_method(method);
  const Window& w = model_options.window;
  cfg.n_shifts = n_shifts;
  if (cfg.strategy == Strategy::minus) {
    cfg.margin_x = minus_margin * w.width();
    cfg.margin_y = minus_margin * w.height();
    cfg.law = ShiftLaw::rect(cfg.margin_x, cfg.margin_y);
  } else {
    cfg.law = ShiftLaw::disk(shift_radius * w.min_side());
  }
  cfg.bandwidth *= w.min_side();
  cfg.alternative = alternative;
  cfg.mc_points = mc_points;
  cfg.surface_nodes = surface_nodes;
  cfg.workers = 1;
  return cfg;
}

const RejectionRow& RejectionTable::row(const std::string& model, const std::string& method) const {
  for (const auto& r : rows) {
    if (r.model == model && r.method == method) return r;
  }
  throw ParameterError("no table row for " + model + " / " + method);
}

ExperimentRun run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentRun run;
  const std::size_t R = spec.replications;
  const Interval band = acceptance_band(spec.alpha, R);

  for (const auto& model_id : spec.models) {
    const std::unique_ptr<Model> model = make_model(model_id, spec.model_options);
    const std::uint64_t model_seed = derive_seed(spec.seed, fnv1a(model->id()));

    struct MethodRun {
      std::string name;
      StrategyConfig cfg;
      std::uint64_t salt;
      std::vector<double> p;
    };
    std::vector<MethodRun> methods;
    for (const auto& name : spec.methods) {
      StrategyConfig cfg = spec.strategy_for(name);
      if ((cfg.statistic == StatisticKind::covariance) != model->is_field()) {
        throw KindMismatchError("method " + name + " does not apply to model " + model->id());
      }
      if (cfg.strategy == Strategy::var_theorem2) {
        const auto pcf = model->pair_correlations();
        if (!pcf) {
          spdlog::info("{}: skipping {} (no analytic pair-correlation function)", model->id(), name);
          continue;
        }
        cfg.g1 = pcf->first;
        cfg.g2 = pcf->second;
        const Window& w = spec.model_options.window;
        spdlog::info("{}: tabulating Theorem-2 integrals", model->id());
        cfg.surface = std::make_shared<Theorem2Surface>(
            cfg.g1, cfg.g2, w, std::max(cfg.law.reach_x(), cfg.law.reach_y()), default_r_grid(w),
            cfg.surface_nodes, cfg.mc_points, derive_seed(model_seed, fnv1a("theorem2-surface")), spec.workers);
      }
      methods.push_back({cfg.method_name(), cfg, fnv1a(cfg.method_name()),
                         std::vector<double>(R, std::numeric_limits<double>::quiet_NaN())});
    }

    std::vector<double> count_phi(R, 0.0), count_psi(R, 0.0);
    std::atomic<std::size_t> done{0};
    parallel_for(R, spec.workers, [&](std::size_t rep) {
      Rng rng = make_rng(model_seed, rep);
      const TestData data = [&] {
        try {
          return model->generate(rng);
        } catch (const Error& e) {
          throw Error(fmt::format("model {} replicate {}: {}", model->id(), rep, e.what()));
        }
      }();
      count_phi[rep] = static_cast<double>(point_count(data, true));
      count_psi[rep] = static_cast<double>(point_count(data, false));
      const std::uint64_t rep_seed = derive_seed(model_seed, rep + 0x5eedULL);
      for (auto& m : methods) {
        try {
          m.p[rep] = run_test(data, m.cfg, derive_seed(rep_seed, m.salt)).p_value;
        } catch (const StatisticUndefined& e) {
          spdlog::debug("{} {} replicate {}: {}", model->id(), m.name, rep, e.what());
        }
      }
      const std::size_t k = ++done;
      if (k % 50 == 0 || k == R) spdlog::info("{}: {}/{} replicates", model->id(), k, R);
    });

    double mean_phi = 0.0, mean_psi = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
      mean_phi += count_phi[i] / static_cast<double>(R);
      mean_psi += count_psi[i] / static_cast<double>(R);
    }
    for (auto& m : methods) {
      RejectionRow row;
      row.model = model->id();
      row.method = m.name;
      row.replications = R;
      row.n_shifts = spec.n_shifts;
      row.alpha = spec.alpha;
      for (double p : m.p) {
        if (std::isnan(p)) {
          ++row.undefined;
        } else if (p <= spec.alpha) {
          ++row.rejections;
        }
      }
      row.rate = static_cast<double>(row.rejections) / static_cast<double>(R);
      const Interval ci = binomial_ci(row.rejections, R);
      row.lo = ci.lo;
      row.hi = ci.hi;
      row.flagged = model->is_null() && (row.rate < band.lo || row.rate > band.hi);
      if (!model->is_field()) {
        row.mean_count_phi = mean_phi;
        row.mean_count_psi = mean_psi;
      }
      run.table.rows.push_back(row);
      run.pvalues[{row.model, row.method}] = std::move(m.p);
    }
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string table_csv(const RejectionTable& table) {
  std::string out = "model,method,R,N,alpha,rejections,undefined,rate,lo,hi,flagged,mean_count_phi,mean_count_psi\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{:.4f},{:.4f},{:.4f},{},{:.2f},{:.2f}\n", csv_field(r.model),
                       csv_field(r.method), r.replications, r.n_shifts, r.alpha, r.rejections, r.undefined, r.rate,
                       r.lo, r.hi, r.flagged ? 1 : 0, r.mean_count_phi, r.mean_count_psi);
  }
  return out;
}

std::string table_json(const RejectionTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"model", r.model},
                    {"method", r.method},
                    {"R", r.replications},
                    {"N", r.n_shifts},
                    {"alpha", r.alpha},
                    {"rejections", r.rejections},
                    {"undefined", r.undefined},
                    {"rate", r.rate},
                    {"lo", r.lo},
                    {"hi", r.hi},
                    {"flagged", r.flagged},
                    {"mean_count_phi", r.mean_count_phi},
                    {"mean_count_psi", r.mean_count_psi}});
  }
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

RejectionTable table_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RejectionTable t;
    for (const auto& r : j.at("rows")) {
      RejectionRow row;
      row.model = r.at("model");
      row.method = r.at("method");
      row.replications = r.at("R");
      row.n_shifts = r.at("N");
      row.alpha = r.at("alpha");
      row.rejections = r.at("rejections");
      row.undefined = r.at("undefined");
      row.rate = r.at("rate");
      row.lo = r.at("lo");
      row.hi = r.at("hi");
      row.flagged = r.at("flagged");
      row.mean_count_phi = r.at("mean_count_phi");
      row.mean_count_psi = r.at("mean_count_psi");
      t.rows.push_back(row);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed table JSON: ") + e.what());
  }
}

std::string spec_json(const ExperimentSpec& s) {
  const Window& w = s.model_options.window;
  nlohmann::json j{{"models", s.models},
                   {"methods", s.methods},
                   {"R", s.replications},
                   {"N", s.n_shifts},
                   {"alpha", s.alpha},
                   {"seed", s.seed},
                   {"workers", s.workers},
                   {"window", {{"x_min", w.x_min()}, {"y_min", w.y_min()}, {"x_max", w.x_max()}, {"y_max", w.y_max()}}},
                   {"grid", {{"nx", s.model_options.grid.nx}, {"ny", s.model_options.grid.ny}}},
                   {"design_n", s.model_options.design_n},
                   {"parent_activity", {{"P8", s.model_options.p8_parent_activity}, {"P9", s.model_options.p9_parent_activity}}},
                   {"shift_radius", s.shift_radius},
                   {"minus_margin", s.minus_margin},
                   {"alternative", to_string(s.alternative)},
                   {"mc_points", s.mc_points},
                   {"surface_nodes", s.surface_nodes}};
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("experiment config must be a JSON object");
  ExperimentSpec s;
  try {
    if (j.contains("preset")) {
      auto [models, methods] = table_preset(j["preset"].get<std::string>());
      s.models = models;
      s.methods = methods;
    }
    if (j.contains("models")) s.models = j["models"].get<std::vector<std::string>>();
    if (j.contains("methods")) s.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("strategies")) s.methods = j["strategies"].get<std::vector<std::string>>();
    s.replications = j.value("R", s.replications);
    s.n_shifts = j.value("N", s.n_shifts);
    s.alpha = j.value("alpha", s.alpha);
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    if (j.contains("window")) {
      const auto& w = j["window"];
      s.model_options.window = Window(w.at("x_min"), w.at("y_min"), w.at("x_max"), w.at("y_max"));
    }
    if (j.contains("grid")) {
      s.model_options.grid.nx = j["grid"].value("nx", s.model_options.grid.nx);
      s.model_options.grid.ny = j["grid"].value("ny", s.model_options.grid.ny);
    }
    s.model_options.design_n = j.value("design_n", s.model_options.design_n);
    if (j.contains("parent_activity")) {
      s.model_options.p8_parent_activity = j["parent_activity"].value("P8", s.model_options.p8_parent_activity);
      s.model_options.p9_parent_activity = j["parent_activity"].value("P9", s.model_options.p9_parent_activity);
    }
    s.shift_radius = j.value("shift_radius", s.shift_radius);
    s.minus_margin = j.value("minus_margin", s.minus_margin);
    if (j.contains("alternative")) s.alternative = parse_alternative(j["alternative"].get<std::string>());
    s.mc_points = j.value("mc_points", s.mc_points);
    s.surface_nodes = j.value("surface_nodes", s.surface_nodes);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("experiment config: ") + e.what());
  }
  return s;
}

void emit_table(const ExperimentRun& run, const ExperimentSpec& spec, const std::string& dir, const std::string& stem) {
  const std::string base = dir + "/" + stem;
  write_file_atomic(base + ".csv", table_csv(run.table));
  write_file_atomic(base + ".json", table_json(run.table));

  std::string pv = "model,method,replicate,p_value\n";
  for (const auto& row : run.table.rows) {
    const auto& p = run.pvalues.at({row.model, row.method});
    for (std::size_t i = 0; i < p.size(); ++i) {
      pv += fmt::format("{},{},{},{}\n", csv_field(row.model), csv_field(row.method), i,
                        std::isnan(p[i]) ? std::string("NA") : fmt::format("{}", p[i]));
    }
  }
  write_file_atomic(base + ".pvalues.csv", pv);

  nlohmann::json manifest{{"spec", nlohmann::json::parse(spec_json(spec))},
                          {"wall_seconds", run.wall_seconds},
                          {"outputs", {stem + ".csv", stem + ".json", stem + ".pvalues.csv"}},
                          {"lgcp_grid", {spec.model_options.grid.nx, spec.model_options.grid.ny}},
                          {"compiler", __VERSION__},
                          {"version", "0.1.0"}};
  write_file_atomic(base + ".manifest.json", manifest.dump(2) + "\n");
}

}  // namespace rshift
