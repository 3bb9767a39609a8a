#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rshift/gaussfield.hpp"
#include "rshift/geometry.hpp"
#include "rshift/random.hpp"

namespace rshift {

/// Finite planar point set inside a window, with optional integer labels.
struct PointPattern {
  Window window;
  std::vector<Point> points;
  std::vector<int> labels;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool labeled() const { return !labels.empty(); }
  double intensity() const { return static_cast<double>(size()) / window.area(); }

  /// Points inside `w`, re-windowed to `w`.
  PointPattern restricted(const Window& w) const;
  /// Every point translated by v (window unchanged; points may leave it).
  PointPattern translated(const Eigen::Vector2d& v) const;
  void validate() const;
};

PointPattern torus_shift(const PointPattern& pattern, const ShiftVector& v, const Window& w);

struct StraussParams {
  double beta = 200.0;
  double gamma = 0.4;
  double radius = 0.03;
  long mcmc_steps = 200000;
  // Sampling happens on W dilated by expansion * radius (capped at a quarter of the shorter
  // side) and is then cropped, which removes the edge excess of a free-boundary Strauss draw.
  double expansion = 3.0;

  void validate() const;
};

struct LgcpParams {
  double mu = 4.5;
  double variance = 1.0;
  double scale = 0.5;

  double intensity() const;
  CovarianceModel covariance() const { return CovarianceModel::exponential(variance, scale); }
  void validate() const;
};

struct ClusterParams {
  double parent_hardcore = 0.05;
  /// Strauss activity of the hard-core parent process.
  double parent_activity = 103.0;
  double offspring_radius = 0.04;
  double mean_offspring = 5.0;

  void validate() const;
};

PointPattern sim_poisson(double intensity, const Window& w, Rng& rng);

/// Cox process driven by exp(mu + Z) with Z a zero-mean field from `embedding`.
PointPattern sim_lgcp(const LgcpParams& params, const CirculantEmbedding& embedding, Rng& rng);
PointPattern sim_lgcp(const LgcpParams& params, const Window& w, GridDims grid, Rng& rng);

/// Two conditionally independent Cox processes sharing one log-intensity realization.
std::pair<PointPattern, PointPattern> sim_lgcp_pair_shared(const LgcpParams& params,
                                                           const CirculantEmbedding& embedding, Rng& rng);
std::pair<PointPattern, PointPattern> sim_lgcp_pair_shared(const LgcpParams& params, const Window& w,
                                                           GridDims grid, Rng& rng);

/// Two independent Cox processes from one embedding draw.
std::pair<PointPattern, PointPattern> sim_lgcp_pair_independent(const LgcpParams& params,
                                                                const CirculantEmbedding& embedding,
                                                                Rng& rng);

/// Poisson points given the log-intensity raster (cell intensity exp(value)).
PointPattern cox_from_log_intensity(const FieldRaster& log_intensity, double mu, Rng& rng);

/// Birth-death-move Metropolis-Hastings draw from the Strauss density, started empty.
PointPattern sim_strauss(const StraussParams& params, const Window& w, Rng& rng);

/// Independent labeling: each point goes to the first output with probability p.
std::pair<PointPattern, PointPattern> random_label_split(const PointPattern& pattern, double p, Rng& rng);

/// Each point displaced by an independent uniform-on-disk vector, wrapped back into the window.
PointPattern jitter_copy(const PointPattern& pattern, double radius, Rng& rng);

/// Hard-core parents, Poisson offspring on a disk, labels inherited from parents; offspring only.
std::pair<PointPattern, PointPattern> sim_cluster_hardcore(const ClusterParams& params, const Window& w,
                                                           Rng& rng);

/// CSV with header x,y[,label]. The window goes to a sidecar JSON file (see sidecar_path).
void write_pattern_csv(const PointPattern& pattern, const std::string& path);
PointPattern read_pattern_csv(const std::string& path, std::optional<Window> window = {});
/// "<stem>.json" next to the CSV.
std::string sidecar_path(const std::string& csv_path);

}  // namespace rshift
