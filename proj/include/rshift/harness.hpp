#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rshift/gaussfield.hpp"
#include "rshift/geometry.hpp"
#include "rshift/shifttest.hpp"
#include "rshift/theorem2.hpp"

namespace rshift {

struct ModelOptions {
  Window window;
  GridDims grid;
  std::size_t design_n = 100;
  double p8_parent_activity = 103.0;
  double p9_parent_activity = 103.0;
};

/// A data-generating model from the simulation study.
class Model {
 public:
  virtual ~Model() = default;
  virtual TestData generate(Rng& rng) const = 0;
  virtual bool is_field() const = 0;
  /// True for the independence (significance-level) models.
  virtual bool is_null() const = 0;
  /// Analytic pair-correlation functions of both components, when known.
  virtual std::optional<std::pair<PairCorrelation, PairCorrelation>> pair_correlations() const { return {}; }
  const std::string& id() const { return id_; }

 protected:
  explicit Model(std::string id) : id_(std::move(id)) {}

 private:
  std::string id_;
};

/// Accepts "RF-null(s)", "RF-power(sigma,s)", "S1".."S6", "P1".."P9".
std::unique_ptr<Model> make_model(const std::string& id, const ModelOptions& options = {});

/// Every (model, method) pair of the four tables in the simulation study.
std::vector<std::pair<std::string, std::string>> registered_pairs();
/// Preset model and method lists: table1 .. table4.
std::pair<std::vector<std::string>, std::vector<std::string>> table_preset(const std::string& name);

struct ExperimentSpec {
  std::vector<std::string> models;
  std::vector<std::string> methods;
  std::size_t replications = 300;
  std::size_t n_shifts = 499;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  ModelOptions model_options;
  double shift_radius = 0.5;     // disk law; fraction of the shorter side
  double minus_margin = 1.0 / 3;  // margins and rectangle half-width; fraction of each side
  Alternative alternative = Alternative::two_sided;
  long mc_points = 100000;
  int surface_nodes = 11;

  void validate() const;
  /// Test configuration for one method on the spec's window.
  StrategyConfig strategy_for(const std::string& method) const;
};

struct RejectionRow {
  std::string model;
  std::string method;
  std::size_t replications = 0;
  std::size_t n_shifts = 0;
  double alpha = 0.05;
  std::size_t rejections = 0;
  std::size_t undefined = 0;  // replicates where the statistic could not be computed
  double rate = 0.0;
  double lo = 0.0, hi = 1.0;  // Clopper–Pearson 95%
  bool flagged = false;       // null model with rate outside the nominal acceptance band
  double mean_count_phi = 0.0, mean_count_psi = 0.0;  // point models
};

struct RejectionTable {
  std::vector<RejectionRow> rows;
  const RejectionRow& row(const std::string& model, const std::string& method) const;
};

struct ExperimentRun {
  RejectionTable table;
  /// p-values per (model, method), one per replicate; NaN where undefined.
  std::map<std::pair<std::string, std::string>, std::vector<double>> pvalues;
  double wall_seconds = 0.0;
};

ExperimentRun run_experiment(const ExperimentSpec& spec);

std::string table_csv(const RejectionTable& table);
std::string table_json(const RejectionTable& table);
RejectionTable table_from_json(const std::string& text);
/// Writes <stem>.csv, <stem>.json and <stem>.manifest.json into `dir`.
void emit_table(const ExperimentRun& run, const ExperimentSpec& spec, const std::string& dir, const std::string& stem);
std::string spec_json(const ExperimentSpec& spec);
/// Inverse of spec_json; missing keys keep their defaults. A "preset" key fills models and methods.
ExperimentSpec spec_from_json(const std::string& text);

// Binomial and goodness-of-fit helpers.
struct Interval {
  double lo = 0.0, hi = 1.0;
};
/// Exact central interval for a binomial success probability.
Interval binomial_ci(std::size_t successes, std::size_t trials, double level = 0.95);
/// Central binomial quantile band for the rate of `trials` draws with success probability p.
Interval acceptance_band(double p, std::size_t trials, double level = 0.95);
double binomial_cdf(std::size_t k, std::size_t n, double p);
/// Kolmogorov–Smirnov distance to U(0, 1) and its asymptotic p-value.
std::pair<double, double> ks_uniform(std::vector<double> sample);

}  // namespace rshift
