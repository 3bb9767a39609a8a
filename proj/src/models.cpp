#include <fmt/format.h>

#include <functional>
#include <regex>

#include "rshift/harness.hpp"
#include "rshift/pointsim.hpp"

namespace rshift {

namespace {

const std::vector<double> kNullScales = {0.001, 0.1, 0.2, 0.3, 0.4, 0.5};
const std::vector<double> kPowerSigmas = {2.0, 4.0, 6.0};
const std::vector<double> kPowerScales = {0.001, 0.2, 0.5};
const std::vector<std::string> kPointModels = {"S1", "S2", "S3", "S4", "S5", "S6", "P1", "P2",
                                               "P3", "P4", "P5", "P6", "P7", "P8", "P9"};
constexpr double kPoissonIntensity = 150.0;
constexpr double kJitterRadius = 0.1;

CirculantEmbedding unit_embedding(double scale, const ModelOptions& o) {
  return CirculantEmbedding(CovarianceModel::exponential(1.0, scale), o.window, o.grid);
}

class RfNull : public Model {
 public:
  RfNull(const std::string& id, double scale, const ModelOptions& o)
      : Model(id), embedding_(unit_embedding(scale, o)), options_(o) {}
  TestData generate(Rng& rng) const override {
    auto [phi, psi] = embedding_.sample_pair(rng);
    SampleDesign design = draw_binomial_design(options_.design_n, options_.window, rng);
    return FieldData{std::move(phi), std::move(psi), std::move(design)};
  }
  bool is_field() const override { return true; }
  bool is_null() const override { return true; }

 private:
  CirculantEmbedding embedding_;
  ModelOptions options_;
};

class RfPower : public Model {
 public:
  RfPower(const std::string& id, double sigma, double scale, const ModelOptions& o)
      : Model(id), embedding_(unit_embedding(scale, o)), sigma_(sigma), options_(o) {}
  TestData generate(Rng& rng) const override {
    auto [phi, psi] = simulate_power_pair(embedding_, sigma_, rng);
    SampleDesign design = draw_binomial_design(options_.design_n, options_.window, rng);
    return FieldData{std::move(phi), std::move(psi), std::move(design)};
  }
  bool is_field() const override { return true; }
  bool is_null() const override { return false; }

 private:
  CirculantEmbedding embedding_;
  double sigma_;
  ModelOptions options_;
};

// Point-process models share the generator signature; the closure captures any embedding.
class PointModel : public Model {
 public:
  using Generator = std::function<std::pair<PointPattern, PointPattern>(Rng&)>;
  PointModel(const std::string& id, bool null, Generator gen,
             std::optional<std::pair<PairCorrelation, PairCorrelation>> pcf = {})
      : Model(id), null_(null), gen_(std::move(gen)), pcf_(pcf) {}
  TestData generate(Rng& rng) const override {
    auto [a, b] = gen_(rng);
    return PatternData{std::move(a), std::move(b)};
  }
  bool is_field() const override { return false; }
  bool is_null() const override { return null_; }
  std::optional<std::pair<PairCorrelation, PairCorrelation>> pair_correlations() const override { return pcf_; }

 private:
  bool null_;
  Generator gen_;
  std::optional<std::pair<PairCorrelation, PairCorrelation>> pcf_;
};

std::unique_ptr<Model> point_model(const std::string& id, const ModelOptions& o) {
  const Window w = o.window;
  const auto lgcp_pcf = [](double s) {
    return std::make_pair(PairCorrelation::lgcp(1.0, s), PairCorrelation::lgcp(1.0, s));
  };
  const auto poisson_pcf = std::make_pair(PairCorrelation::poisson(), PairCorrelation::poisson());
  const auto strauss = [](double beta, double gamma, double radius) {
    StraussParams p;
    p.beta = beta;
    p.gamma = gamma;
    p.radius = radius;
    return p;
  };

  if (id == "S1" || id == "S2" || id == "S3") {
    const double s = id == "S1" ? 0.5 : id == "S2" ? 0.3 : 0.1;
    auto emb = std::make_shared<CirculantEmbedding>(unit_embedding(s, o));
    const LgcpParams params{4.5, 1.0, s};
    return std::make_unique<PointModel>(
        id, true, [emb, params](Rng& rng) { return sim_lgcp_pair_independent(params, *emb, rng); }, lgcp_pcf(s));
  }
  if (id == "S4") {
    return std::make_unique<PointModel>(
        id, true,
        [w](Rng& rng) {
          PointPattern a = sim_poisson(kPoissonIntensity, w, rng);
          PointPattern b = sim_poisson(kPoissonIntensity, w, rng);
          return std::make_pair(std::move(a), std::move(b));
        },
        poisson_pcf);
  }
  if (id == "S5" || id == "S6") {
    const StraussParams p = id == "S5" ? strauss(200.0, 0.4, 0.03) : strauss(350.0, 0.4, 0.05);
    return std::make_unique<PointModel>(id, true, [w, p](Rng& rng) {
      PointPattern a = sim_strauss(p, w, rng);
      PointPattern b = sim_strauss(p, w, rng);
      return std::make_pair(std::move(a), std::move(b));
    });
  }
  if (id == "P1" || id == "P2") {
    const double s = id == "P1" ? 0.3 : 0.1;
    auto emb = std::make_shared<CirculantEmbedding>(unit_embedding(s, o));
    const LgcpParams params{4.5, 1.0, s};
    return std::make_unique<PointModel>(
        id, false, [emb, params](Rng& rng) { return sim_lgcp_pair_shared(params, *emb, rng); }, lgcp_pcf(s));
  }
  if (id == "P3" || id == "P4") {
    const double s = id == "P3" ? 0.3 : 0.1;
    auto emb = std::make_shared<CirculantEmbedding>(unit_embedding(s, o));
    const LgcpParams params{4.5, 1.0, s};
    return std::make_unique<PointModel>(
        id, false,
        [emb, params](Rng& rng) {
          PointPattern a = sim_lgcp(params, *emb, rng);
          PointPattern b = jitter_copy(a, kJitterRadius, rng);
          return std::make_pair(std::move(a), std::move(b));
        },
        lgcp_pcf(s));
  }
  if (id == "P5") {
    return std::make_unique<PointModel>(
        id, false,
        [w](Rng& rng) {
          PointPattern a = sim_poisson(kPoissonIntensity, w, rng);
          PointPattern b = jitter_copy(a, kJitterRadius, rng);
          return std::make_pair(std::move(a), std::move(b));
        },
        poisson_pcf);
  }
  if (id == "P6" || id == "P7") {
    const StraussParams p = id == "P6" ? strauss(520.0, 0.4, 0.03) : strauss(650.0, 0.7, 0.05);
    return std::make_unique<PointModel>(id, false, [w, p](Rng& rng) {
      const PointPattern all = sim_strauss(p, w, rng);
      return random_label_split(all, 0.5, rng);
    });
  }
  if (id == "P8" || id == "P9") {
    ClusterParams c;
    c.parent_hardcore = 0.05;
    c.offspring_radius = id == "P8" ? 0.04 : 0.06;
    c.mean_offspring = 5.0;
    c.parent_activity = id == "P8" ? o.p8_parent_activity : o.p9_parent_activity;
    return std::make_unique<PointModel>(id, false, [w, c](Rng& rng) { return sim_cluster_hardcore(c, w, rng); });
  }
  return nullptr;
}

std::string valid_ids() {
  return "RF-null(s), RF-power(sigma,s), S1..S6, P1..P9";
}

double parse_number(const std::string& s, const std::string& id) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("bad number in model id '" + id + "'");
  }
}

}  // namespace

std::unique_ptr<Model> make_model(const std::string& raw, const ModelOptions& options) {
  std::string id;
  for (char c : raw) {
    if (c != ' ') id += c;
  }
  static const std::regex null_re(R"(^RF-null\(([^,()]+)\)$)");
  static const std::regex power_re(R"(^RF-power\(([^,()]+),([^,()]+)\)$)");
  std::smatch m;
  if (std::regex_match(id, m, null_re)) {
    const double s = parse_number(m[1].str(), raw);
    if (!(s > 0.0)) throw ParameterError("RF scale must be positive");
    return std::make_unique<RfNull>(fmt::format("RF-null({:g})", s), s, options);
  }
  if (std::regex_match(id, m, power_re)) {
    const double sigma = parse_number(m[1].str(), raw);
    const double s = parse_number(m[2].str(), raw);
    if (!(sigma > 0.0) || !(s > 0.0)) throw ParameterError("RF-power parameters must be positive");
    return std::make_unique<RfPower>(fmt::format("RF-power({:g},{:g})", sigma, s), sigma, s, options);
  }
  if (auto model = point_model(id, options)) return model;
  throw ParameterError("unknown model '" + raw + "'; valid ids: " + valid_ids());
}

std::pair<std::vector<std::string>, std::vector<std::string>> table_preset(const std::string& name) {
  std::vector<std::string> models;
  std::vector<std::string> methods;
  if (name == "table1" || name == "table2") {
    if (name == "table1") {
      for (double s : kNullScales) models.push_back(fmt::format("RF-null({:g})", s));
    } else {
      for (double sigma : kPowerSigmas) {
        for (double s : kPowerScales) models.push_back(fmt::format("RF-power({:g},{:g})", sigma, s));
      }
    }
    methods = {"RS_torus", "RS_minus", "RS_count", "RS_var", "RS_ker(0.05)", "RS_ker(0.1)", "RS_ker(0.15)"};
  } else if (name == "table3") {
    models = kPointModels;
    methods = {"RS_K,torus", "RS_K,minus", "RS_K,ker(0.05)", "RS_K,ker(0.1)", "RS_K,ker(0.15)", "RS_K,var"};
  } else if (name == "table4") {
    models = kPointModels;
    methods = {"RS_G,torus", "RS_G,minus", "RS_G,ker(0.05)", "RS_G,ker(0.1)", "RS_G,ker(0.15)"};
  } else {
    throw ParameterError("unknown preset '" + name + "' (expected table1, table2, table3 or table4)");
  }
  return {models, methods};
}

std::vector<std::pair<std::string, std::string>> registered_pairs() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const char* t : {"table1", "table2", "table3", "table4"}) {
    const auto [models, methods] = table_preset(t);
    for (const auto& model : models) {
      for (const auto& method : methods) {
        if (method == "RS_K,var" && !make_model(model)->pair_correlations()) continue;
        out.emplace_back(model, method);
      }
    }
  }
  return out;
}

}  // namespace rshift
