#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rshift/geometry.hpp"
#include "rshift/random.hpp"

namespace rshift {

enum class CovarianceFamily { exponential };

/// Isotropic covariance C(r) = variance * exp(-r / scale), zero beyond `range`.
struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::exponential;
  double variance = 1.0;
  double scale = 0.1;
  double range = std::numeric_limits<double>::infinity();

  static CovarianceModel exponential(double variance, double scale,
                                     double range = std::numeric_limits<double>::infinity());

  double operator()(double r) const;
  void validate() const;
  std::string describe() const;
};

struct GridDims {
  int nx = 256;
  int ny = 256;
};

/// A field sampled on the cells of a regular grid covering a window.
///
/// values(ix, iy) holds the value of the cell whose lower-left corner is
/// (x_min + ix * dx, y_min + iy * dy).
class FieldRaster {
 public:
  FieldRaster(const Window& window, Eigen::MatrixXd values, std::string model = {});

  const Window& window() const { return window_; }
  int nx() const { return static_cast<int>(values_.rows()); }
  int ny() const { return static_cast<int>(values_.cols()); }
  double cell_width() const { return window_.width() / nx(); }
  double cell_height() const { return window_.height() / ny(); }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  const std::string& model() const { return model_; }

  Point cell_center(int ix, int iy) const;
  /// Value of the cell containing p; p must lie in the window.
  double at(const Point& p) const;
  bool lookup(const Point& p, double& out) const;

 private:
  Window window_;
  Eigen::MatrixXd values_;
  std::string model_;
};

enum class DesignType { binomial, grid, user };

struct SampleDesign {
  std::vector<Point> locations;
  DesignType type = DesignType::user;
  std::size_t size() const { return locations.size(); }
};

/// Field values Φ(X) and Ψ(X) observed at a common set of locations.
struct MarkedSample {
  std::vector<Point> locations;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
};

/// Circulant-embedding sampler for a stationary Gaussian field on a fixed grid.
///
/// The embedding spectrum is computed once; each call to sample_pair() costs
/// one complex FFT and yields two independent fields. Negative embedding
/// eigenvalues are set to zero. The padding factor grows from 2 to 4 until the
/// truncated mass is at most 1e-3; above 1e-2 construction fails.
class CirculantEmbedding {
 public:
  CirculantEmbedding(const CovarianceModel& model, const Window& window, GridDims grid);

  std::pair<FieldRaster, FieldRaster> sample_pair(Rng& rng) const;
  FieldRaster sample(Rng& rng) const;

  /// Sum of |negative eigenvalues| over sum of |eigenvalues|.
  double truncated_mass() const { return truncated_mass_; }
  int padding() const { return padding_; }
  /// True when the scale is at most two cells and the sampler draws i.i.d. normals.
  bool iid() const { return iid_; }
  const CovarianceModel& model() const { return model_; }

 private:
  CovarianceModel model_;
  Window window_;
  GridDims grid_;
  bool iid_ = false;
  int padding_ = 0;
  double truncated_mass_ = 0.0;
  Eigen::MatrixXd sqrt_spectrum_;
};

FieldRaster simulate_grf(const CovarianceModel& model, const Window& w, GridDims grid, Rng& rng);

/// (Z1, Z1 + sigma Z2) for independent unit-variance fields Z1, Z2 with exp(-r/scale) correlation.
std::pair<FieldRaster, FieldRaster> simulate_power_pair(double scale, double sigma, const Window& w,
                                                        GridDims grid, Rng& rng);
std::pair<FieldRaster, FieldRaster> simulate_power_pair(const CirculantEmbedding& unit_embedding,
                                                        double sigma, Rng& rng);

SampleDesign draw_binomial_design(std::size_t n, const Window& w, Rng& rng);

/// Nearest-cell lookup at every design location.
Eigen::VectorXd read_field(const FieldRaster& raster, const SampleDesign& design);
Eigen::VectorXd read_field(const FieldRaster& raster, const std::vector<Point>& locations);

/// Raster whose cell (ix, iy) holds the original value at the torus location center - v.
FieldRaster torus_shift(const FieldRaster& raster, const ShiftVector& v, const Window& w);

// Text raster: "nx ny", "x_min y_min x_max y_max", then ny rows of nx values (row iy, column ix).
void write_raster_text(const FieldRaster& raster, const std::string& path);
FieldRaster read_raster_text(const std::string& path);
/// CSV long format with header x,y,value; one row per cell center.
void write_raster_csv(const FieldRaster& raster, const std::string& path);
/// Reads a CSV long raster; the grid is inferred from the distinct cell-center coordinates.
FieldRaster read_raster_csv(const std::string& path);

}  // namespace rshift
