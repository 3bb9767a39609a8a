#include "rshift/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rshift/harness.hpp"
#include "rshift/io.hpp"
#include "rshift/pointsim.hpp"
#include "rshift/summaries.hpp"
#include "rshift/svg.hpp"

namespace rshift {

using nlohmann::json;

std::string apply_overrides(const std::string& config_json, const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = config_json.empty() ? json::object() : json::parse(config_json);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("config must be a JSON object");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json* node = &doc;
    std::size_t pos = 0;
    for (;;) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (part.empty()) throw ParameterError("override '" + item + "' has an empty path component");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      json& child = (*node)[part];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) throw ParameterError("override '" + item + "': '" + part + "' is not an object");
      node = &child;
      pos = dot + 1;
    }
  }
  return doc.dump();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const FormatError*>(&e)) return kExitParse;
  if (dynamic_cast<const KindMismatchError*>(&e)) return kExitKindMismatch;
  if (dynamic_cast<const WindowMismatchError*>(&e)) return kExitWindowMismatch;
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const GeometryError*>(&e)) return kExitUsage;
  return kExitRuntime;
}

DataKind detect_kind(const std::string& path) {
  if (std::filesystem::path(path).extension() != ".csv") return DataKind::raster;
  std::istringstream in(read_file(path));
  std::string header;
  std::getline(in, header);
  header.erase(std::remove_if(header.begin(), header.end(), ::isspace), header.end());
  if (header == "x,y,value") return DataKind::raster;
  if (header == "x,y" || header == "x,y,label") return DataKind::pattern;
  throw FormatError(path + ": unrecognized CSV header '" + header + "'");
}

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out = ".";
  unsigned workers = 1;
  std::vector<std::string> sets;
};

json load_config(const Common& c) {
  const std::string text = c.config_path.empty() ? std::string() : read_file(c.config_path);
  return json::parse(apply_overrides(text, c.sets));
}

std::uint64_t seed_of(const Common& c, const json& cfg) {
  if (c.seed_given) return c.seed;
  return cfg.value("seed", c.seed);
}

Window window_of(const json& cfg) {
  if (!cfg.contains("window")) return Window::unit_square();
  const auto& w = cfg["window"];
  return Window(w.at("x_min"), w.at("y_min"), w.at("x_max"), w.at("y_max"));
}

// ---- simulate ----

int cmd_simulate(const Common& c, const std::string& model_flag) {
  json cfg = load_config(c);
  if (!model_flag.empty()) cfg["model"] = model_flag;
  if (!cfg.contains("model")) throw ParameterError("simulate needs a model id (config key 'model' or --model)");
  ModelOptions opt;
  opt.window = window_of(cfg);
  if (cfg.contains("grid")) {
    opt.grid.nx = cfg["grid"].value("nx", opt.grid.nx);
    opt.grid.ny = cfg["grid"].value("ny", opt.grid.ny);
  }
  opt.design_n = cfg.value("design_n", opt.design_n);
  if (cfg.contains("parent_activity")) {
    opt.p8_parent_activity = cfg["parent_activity"].value("P8", opt.p8_parent_activity);
    opt.p9_parent_activity = cfg["parent_activity"].value("P9", opt.p9_parent_activity);
  }
  const auto model = make_model(cfg["model"].get<std::string>(), opt);
  const std::uint64_t seed = seed_of(c, cfg);
  Rng rng = make_rng(seed, 0);
  const TestData data = model->generate(rng);

  json desc{{"model", model->id()}, {"seed", seed}};
  if (const auto* f = std::get_if<FieldData>(&data)) {
    write_raster_text(f->phi, c.out + "/phi.txt");
    write_raster_text(f->psi, c.out + "/psi.txt");
    PointPattern design{f->phi.window(), f->design.locations, {}};
    write_pattern_csv(design, c.out + "/design.csv");
    desc["kind"] = "field";
    desc["grid"] = {f->phi.nx(), f->phi.ny()};
    desc["files"] = {"phi.txt", "psi.txt", "design.csv"};
  } else {
    const auto& p = std::get<PatternData>(data);
    write_pattern_csv(p.phi, c.out + "/phi.csv");
    write_pattern_csv(p.psi, c.out + "/psi.csv");
    desc["kind"] = "pattern";
    desc["counts"] = {p.phi.size(), p.psi.size()};
    desc["files"] = {"phi.csv", "psi.csv"};
  }
  write_file_atomic(c.out + "/simulate.json", desc.dump(2) + "\n");
  std::cout << "wrote " << model->id() << " to " << c.out << "\n";
  return kExitOk;
}

// ---- test ----

FieldRaster read_raster(const std::string& path) {
  return detect_kind(path) == DataKind::raster && std::filesystem::path(path).extension() == ".csv"
             ? read_raster_csv(path)
             : read_raster_text(path);
}

PairCorrelation pcf_of(const json& j) {
  if (j.is_null() || j.value("kind", "poisson") == "poisson") return PairCorrelation::poisson();
  if (j.value("kind", "") != "lgcp") throw ParameterError("pcf kind must be poisson or lgcp");
  return PairCorrelation::lgcp(j.at("variance").get<double>(), j.at("scale").get<double>());
}

TestData load_test_data(const json& cfg, std::uint64_t seed) {
  const std::string phi_path = cfg.value("phi", "");
  const std::string psi_path = cfg.value("psi", "");
  if (phi_path.empty() || psi_path.empty()) throw ParameterError("test needs two data files (--phi and --psi)");
  const DataKind a = detect_kind(phi_path);
  const DataKind b = detect_kind(psi_path);
  if (a != b) throw KindMismatchError("cannot test a point pattern against a field");
  if (a == DataKind::pattern) {
    PointPattern phi = read_pattern_csv(phi_path);
    PointPattern psi = read_pattern_csv(psi_path);
    if (!(phi.window == psi.window)) throw WindowMismatchError("the two patterns have different windows");
    return PatternData{std::move(phi), std::move(psi)};
  }
  FieldRaster phi = read_raster(phi_path);
  FieldRaster psi = read_raster(psi_path);
  if (!(phi.window() == psi.window())) throw WindowMismatchError("the two rasters cover different windows");
  const json design = cfg.value("design", json::object());
  const std::string type = design.value("type", cfg.contains("design_path") ? "file" : "binomial");
  SampleDesign d;
  if (type == "binomial") {
    Rng rng = make_rng(seed, 0xde5197ULL);
    d = draw_binomial_design(design.value("n", std::size_t{100}), phi.window(), rng);
  } else if (type == "grid") {
    d.type = DesignType::grid;
    for (int iy = 0; iy < phi.ny(); ++iy) {
      for (int ix = 0; ix < phi.nx(); ++ix) d.locations.push_back(phi.cell_center(ix, iy));
    }
  } else if (type == "file") {
    const std::string path = design.value("path", cfg.value("design_path", ""));
    d.locations = read_pattern_csv(path, phi.window()).points;
    d.type = DesignType::user;
  } else {
    throw ParameterError("design.type must be binomial, grid or file");
  }
  return FieldData{std::move(phi), std::move(psi), std::move(d)};
}

StrategyConfig test_config(const json& cfg, const Window& w, unsigned workers) {
  if (!cfg.contains("method")) throw ParameterError("test needs a method (config key 'method' or --method)");
  StrategyConfig s = parse_method(cfg["method"].get<std::string>());
  s.n_shifts = cfg.value("N", std::size_t{999});
  if (s.strategy == Strategy::minus) {
    const double m = cfg.value("minus_margin", 1.0 / 3);
    s.margin_x = cfg.value("margin_x", m * w.width());
    s.margin_y = cfg.value("margin_y", m * w.height());
    s.law = ShiftLaw::rect(cfg.value("shift_half_width_x", s.margin_x), cfg.value("shift_half_width_y", s.margin_y));
  } else {
    s.law = ShiftLaw::disk(cfg.value("shift_radius", 0.5 * w.min_side()));
  }
  if (cfg.contains("bandwidth")) s.bandwidth = cfg["bandwidth"].get<double>();
  if (cfg.contains("alternative")) s.alternative = parse_alternative(cfg["alternative"].get<std::string>());
  if (cfg.contains("r_max")) {
    const int k = cfg.value("r_points", 50);
    s.r_grid = default_r_grid(w, k, cfg["r_max"].get<double>() / w.min_side());
  }
  s.variogram_max_lag = cfg.value("variogram_max_lag", 0.0);
  s.mc_points = cfg.value("mc_points", s.mc_points);
  s.surface_nodes = cfg.value("surface_nodes", s.surface_nodes);
  if (cfg.contains("pcf")) {
    s.g1 = pcf_of(cfg["pcf"].value("phi", json()));
    s.g2 = pcf_of(cfg["pcf"].value("psi", json()));
  }
  s.workers = workers;
  s.validate(w);
  return s;
}

int cmd_test(const Common& c, const std::string& phi, const std::string& psi, const std::string& method) {
  json cfg = load_config(c);
  if (!phi.empty()) cfg["phi"] = phi;
  if (!psi.empty()) cfg["psi"] = psi;
  if (!method.empty()) cfg["method"] = method;
  const std::uint64_t seed = seed_of(c, cfg);
  const TestData data = load_test_data(cfg, seed);
  const StrategyConfig s = test_config(cfg, data_window(data), c.workers);
  const TestResult result = run_test(data, s, seed);
  write_file_atomic(c.out + "/result.json", to_json(result));
  std::cout << "p-value " << result.p_value << " " << result.method << "\n";
  return kExitOk;
}

// ---- experiment ----

int cmd_experiment(const Common& c, const std::string& preset) {
  json cfg = load_config(c);
  if (!preset.empty()) cfg["preset"] = preset;
  ExperimentSpec spec = spec_from_json(cfg.dump());
  if (c.seed_given) spec.seed = c.seed;
  spec.workers = c.workers;
  spec.validate();
  const std::string stem = cfg.value("name", cfg.value("preset", std::string("experiment")));
  const ExperimentRun run = run_experiment(spec);
  emit_table(run, spec, c.out, stem);
  std::cout << table_csv(run.table);
  return kExitOk;
}

// ---- envelope-plot ----

int cmd_envelope_plot(const Common& c, const std::string& result_path, const std::string& output) {
  json cfg = load_config(c);
  const std::string path = result_path.empty() ? cfg.value("result", "") : result_path;
  if (path.empty()) throw ParameterError("envelope-plot needs a result file (--result)");
  const TestResult r = test_result_from_json(read_file(path));
  const std::string svg = envelope_svg(r, cfg.value("alpha", 0.05));
  const std::string target = output.empty() ? c.out + "/envelope.svg" : output;
  write_file_atomic(target, svg);
  std::cout << "wrote " << target << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_given = true; }, "master seed");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--set", c.sets, "override a config entry: dotted.key=value")->take_all();
}

}  // namespace

int run_cli(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("rshift"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Random-shift tests of independence between spatial processes"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  Common c;
  std::string model, phi, psi, method, preset, result, output;
  auto* sim = app.add_subcommand("simulate", "simulate a model and write its data files");
  add_common(sim, c);
  sim->add_option("--model", model, "model id, e.g. S4 or RF-null(0.5)");
  auto* test = app.add_subcommand("test", "run one independence test on two datasets");
  add_common(test, c);
  test->add_option("--phi", phi, "first dataset");
  test->add_option("--psi", psi, "second dataset");
  test->add_option("--method", method, "method name, e.g. RS_K,torus");
  auto* exp = app.add_subcommand("experiment", "run a rejection-rate experiment");
  add_common(exp, c);
  exp->add_option("--preset", preset, "table1, table2, table3 or table4");
  auto* plot = app.add_subcommand("envelope-plot", "draw the global envelope of a functional test result");
  add_common(plot, c);
  plot->add_option("--result", result, "result JSON written by 'test'");
  plot->add_option("--output", output, "SVG path (default <out>/envelope.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*sim) return cmd_simulate(c, model);
    if (*test) return cmd_test(c, phi, psi, method);
    if (*exp) return cmd_experiment(c, preset);
    if (*plot) return cmd_envelope_plot(c, result, output);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace rshift
