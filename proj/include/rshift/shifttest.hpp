#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "rshift/error.hpp"
#include "rshift/gaussfield.hpp"
#include "rshift/geometry.hpp"
#include "rshift/pointsim.hpp"
#include "rshift/series.hpp"
#include "rshift/theorem2.hpp"
#include "rshift/variance.hpp"

namespace rshift {

/// Field data paired with point data, or two datasets observed on different windows.
class KindMismatchError : public Error {
 public:
  using Error::Error;
};

class WindowMismatchError : public Error {
 public:
  using Error::Error;
};

enum class Strategy { torus, minus, var_count, var_exact, var_kernel, var_theorem2 };
enum class StatisticKind { covariance, cross_k, mean_nn };
enum class Alternative { two_sided, greater, less };

std::string to_string(Strategy s);
std::string to_string(StatisticKind s);
std::string to_string(Alternative a);
Alternative parse_alternative(const std::string& s);

struct ShiftLaw {
  enum class Kind { disk, rect };
  Kind kind = Kind::disk;
  double radius = 0.5;      // disk
  double half_x = 1.0 / 3;  // rect
  double half_y = 1.0 / 3;

  static ShiftLaw disk(double radius) { return {Kind::disk, radius, 0.0, 0.0}; }
  static ShiftLaw rect(double hx, double hy) { return {Kind::rect, 0.0, hx, hy}; }

  ShiftVector draw(Rng& rng) const;
  /// Largest possible |v_x| and |v_y|.
  double reach_x() const { return kind == Kind::disk ? radius : half_x; }
  double reach_y() const { return kind == Kind::disk ? radius : half_y; }
};

struct StrategyConfig {
  Strategy strategy = Strategy::torus;
  StatisticKind statistic = StatisticKind::covariance;
  std::size_t n_shifts = 999;
  ShiftLaw law = ShiftLaw::disk(0.5);
  double margin_x = 1.0 / 3;  // minus only
  double margin_y = 1.0 / 3;
  double bandwidth = 0.1;  // var_kernel
  Alternative alternative = Alternative::two_sided;
  Eigen::VectorXd r_grid;  // empty: default_r_grid of the data window
  int max_redraws = 100;
  double min_area_fraction = 0.01;  // variance strategies: smaller W_i are redrawn
  // var_exact
  double variogram_max_lag = 0.0;  // 0: half the longer window side
  int variogram_bins = 15;
  double covariance_truncation = 5.0;
  // var_theorem2
  PairCorrelation g1, g2;
  long mc_points = 100000;
  int surface_nodes = 11;
  std::shared_ptr<const Theorem2Surface> surface;  // reused when set
  unsigned workers = 1;

  /// Paper-style method name, e.g. "RS_K,ker(0.1)".
  std::string method_name() const;
  void validate(const Window& w) const;
};

/// Parses a method name into strategy, statistic and bandwidth. Other fields keep their defaults.
StrategyConfig parse_method(const std::string& name);

/// Two rasters read at a common sampling design.
struct FieldData {
  FieldRaster phi;
  FieldRaster psi;
  SampleDesign design;
};

struct PatternData {
  PointPattern phi;
  PointPattern psi;
};

using TestData = std::variant<FieldData, PatternData>;

const Window& data_window(const TestData& data);

TestStatisticSeries run_torus(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed);
TestStatisticSeries run_minus(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed);
/// Statistics on W ∩ (W + v_i), standardized with the configured variance estimator.
TestStatisticSeries run_variance(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed);

struct Envelope {
  Eigen::VectorXd r, lo, hi, observed;
  bool standardized = false;
};

struct TestResult {
  double p_value = 1.0;
  std::string method;
  std::string strategy;
  std::string statistic;
  std::size_t n_shifts = 0;
  std::uint64_t seed = 0;
  std::size_t n_redraws = 0;
  std::string alternative = "two-sided";
  std::string variance_method;
  double observed = 0.0;  // T_0 (scalar statistics)
  std::optional<Envelope> envelope;
};

/// Monte Carlo rank p-value of entry 0; ties count as exceedances.
double mc_pvalue(const Eigen::VectorXd& s, Alternative alternative = Alternative::two_sided);
TestResult mc_pvalue_scalar(const TestStatisticSeries& series, Alternative alternative = Alternative::two_sided);

struct ErlResult {
  double p_value = 1.0;
  Eigen::VectorXd lo, hi;
  /// c_i: number of curves at least as extreme as curve i (itself included).
  Eigen::VectorXi extremeness;
};

/// Two-sided extreme-rank-length test of curve 0 against curves 1..N (rows of `curves`).
ErlResult erl_test(const Eigen::MatrixXd& curves, double alpha = 0.05);
TestResult global_envelope_erl(const TestStatisticSeries& series, double alpha = 0.05);

TestResult run_test(const TestData& data, const StrategyConfig& cfg, std::uint64_t seed);

std::string to_json(const TestResult& result);
TestResult test_result_from_json(const std::string& text);

}  // namespace rshift
