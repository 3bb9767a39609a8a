#include "rshift/gaussfield.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "rshift/error.hpp"

namespace rshift {

namespace {

using Complex = std::complex<double>;

constexpr double kWarnMass = 1e-3;
constexpr double kFailMass = 1e-2;

// In-place unnormalized forward 2D DFT of a column-major matrix.
void fft2_forward(Eigen::MatrixXcd& m) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in;
  std::vector<Complex> out;
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  in.resize(rows);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) in[r] = m(r, c);
    fft.fwd(out, in);
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = out[r];
  }
  in.resize(cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) in[c] = m(r, c);
    fft.fwd(out, in);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = out[c];
  }
}

}  // namespace

CovarianceModel CovarianceModel::exponential(double variance, double scale, double range) {
  CovarianceModel m;
  m.variance = variance;
  m.scale = scale;
  m.range = range;
  m.validate();
  return m;
}

double CovarianceModel::operator()(double r) const {
  if (r > range) return 0.0;
  return variance * std::exp(-r / scale);
}

void CovarianceModel::validate() const {
  if (!(variance >= 0.0)) throw ParameterError("covariance variance must be non-negative");
  if (!(scale > 0.0)) throw ParameterError("covariance scale must be positive");
  if (!(range > 0.0)) throw ParameterError("covariance range must be positive");
}

std::string CovarianceModel::describe() const {
  std::ostringstream os;
  os << "exponential(variance=" << variance << ",scale=" << scale << ")";
  return os.str();
}

FieldRaster::FieldRaster(const Window& window, Eigen::MatrixXd values, std::string model)
    : window_(window), values_(std::move(values)), model_(std::move(model)) {
  if (values_.rows() < 2 || values_.cols() < 2) throw ParameterError("raster needs at least 2x2 cells");
}

Point FieldRaster::cell_center(int ix, int iy) const {
  return {window_.x_min() + (ix + 0.5) * cell_width(), window_.y_min() + (iy + 0.5) * cell_height()};
}

bool FieldRaster::lookup(const Point& p, double& out) const {
  if (!window_.contains(p)) return false;
  int ix = static_cast<int>((p.x() - window_.x_min()) / cell_width());
  int iy = static_cast<int>((p.y() - window_.y_min()) / cell_height());
  ix = std::clamp(ix, 0, nx() - 1);
  iy = std::clamp(iy, 0, ny() - 1);
  out = values_(ix, iy);
  return true;
}

double FieldRaster::at(const Point& p) const {
  double v = 0.0;
  if (!lookup(p, v)) throw LookupError("location outside raster window", 0);
  return v;
}

CirculantEmbedding::CirculantEmbedding(const CovarianceModel& model, const Window& window, GridDims grid)
    : model_(model), window_(window), grid_(grid) {
  model_.validate();
  if (grid.nx < 2 || grid.ny < 2) throw ParameterError("grid must be at least 2x2");
  const double dx = window.width() / grid.nx;
  const double dy = window.height() / grid.ny;
  if (model_.scale <= 2.0 * std::max(dx, dy)) {
    iid_ = true;
    return;
  }
  for (int pad = 2; pad <= 4; ++pad) {
    const Eigen::Index m1 = static_cast<Eigen::Index>(pad) * grid.nx;
    const Eigen::Index m2 = static_cast<Eigen::Index>(pad) * grid.ny;
    Eigen::MatrixXcd spectrum(m1, m2);
    for (Eigen::Index j = 0; j < m2; ++j) {
      const double ly = static_cast<double>(std::min(j, m2 - j)) * dy;
      for (Eigen::Index i = 0; i < m1; ++i) {
        const double lx = static_cast<double>(std::min(i, m1 - i)) * dx;
        spectrum(i, j) = model_(std::hypot(lx, ly));
      }
    }
    fft2_forward(spectrum);
    double negative = 0.0;
    double total = 0.0;
    Eigen::MatrixXd root(m1, m2);
    const double norm = 1.0 / static_cast<double>(m1 * m2);
    for (Eigen::Index j = 0; j < m2; ++j) {
      for (Eigen::Index i = 0; i < m1; ++i) {
        const double ev = spectrum(i, j).real();
        total += std::abs(ev);
        if (ev < 0.0) negative -= ev;
        root(i, j) = ev > 0.0 ? std::sqrt(ev * norm) : 0.0;
      }
    }
    padding_ = pad;
    truncated_mass_ = total > 0.0 ? negative / total : 0.0;
    sqrt_spectrum_ = std::move(root);
    if (truncated_mass_ <= kWarnMass) break;
  }
  if (truncated_mass_ > kFailMass) {
    throw SimulationQualityError("circulant embedding truncated mass " + std::to_string(truncated_mass_) +
                                 " exceeds 1e-2 for " + model_.describe());
  }
  if (truncated_mass_ > kWarnMass) {
    spdlog::warn("circulant embedding for {} truncates {:.2e} of the spectral mass", model_.describe(),
                 truncated_mass_);
  }
}

std::pair<FieldRaster, FieldRaster> CirculantEmbedding::sample_pair(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(grid_.nx, grid_.ny);
  Eigen::MatrixXd b(grid_.nx, grid_.ny);
  if (iid_) {
    const double sd = std::sqrt(model_.variance);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = sd * normal(rng);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) = sd * normal(rng);
  } else {
    Eigen::MatrixXcd work(sqrt_spectrum_.rows(), sqrt_spectrum_.cols());
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      for (Eigen::Index i = 0; i < work.rows(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        work(i, j) = sqrt_spectrum_(i, j) * Complex(re, im);
      }
    }
    fft2_forward(work);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a(i, j) = work(i, j).real();
        b(i, j) = work(i, j).imag();
      }
    }
  }
  const std::string tag = model_.describe();
  return {FieldRaster(window_, std::move(a), tag), FieldRaster(window_, std::move(b), tag)};
}

FieldRaster CirculantEmbedding::sample(Rng& rng) const { return sample_pair(rng).first; }

FieldRaster simulate_grf(const CovarianceModel& model, const Window& w, GridDims grid, Rng& rng) {
  return CirculantEmbedding(model, w, grid).sample(rng);
}

std::pair<FieldRaster, FieldRaster> simulate_power_pair(const CirculantEmbedding& unit_embedding,
                                                        double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw ParameterError("power alternative needs sigma > 0");
  auto [z1, z2] = unit_embedding.sample_pair(rng);
  Eigen::MatrixXd psi = z1.values() + sigma * z2.values();
  FieldRaster psi_raster(z1.window(), std::move(psi), z1.model() + "+sigma*Z2");
  return {std::move(z1), std::move(psi_raster)};
}

std::pair<FieldRaster, FieldRaster> simulate_power_pair(double scale, double sigma, const Window& w,
                                                        GridDims grid, Rng& rng) {
  if (!(sigma > 0.0)) throw ParameterError("power alternative needs sigma > 0");
  const CirculantEmbedding embedding(CovarianceModel::exponential(1.0, scale), w, grid);
  return simulate_power_pair(embedding, sigma, rng);
}

SampleDesign draw_binomial_design(std::size_t n, const Window& w, Rng& rng) {
  if (n < 2) throw ParameterError("a sampling design needs at least 2 locations");
  SampleDesign design;
  design.type = DesignType::binomial;
  design.locations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform(rng, w.x_min(), w.x_max());
    const double y = uniform(rng, w.y_min(), w.y_max());
    design.locations.emplace_back(x, y);
  }
  return design;
}

Eigen::VectorXd read_field(const FieldRaster& raster, const std::vector<Point>& locations) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(locations.size()));
  for (std::size_t i = 0; i < locations.size(); ++i) {
    double v = 0.0;
    if (!raster.lookup(locations[i], v)) {
      throw LookupError("sampling location " + std::to_string(i) + " lies outside the raster window", i);
    }
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

Eigen::VectorXd read_field(const FieldRaster& raster, const SampleDesign& design) {
  return read_field(raster, design.locations);
}

FieldRaster torus_shift(const FieldRaster& raster, const ShiftVector& v, const Window& w) {
  if (!(raster.window() == w)) throw GeometryError("torus shift requires the raster's own rectangular window");
  Eigen::MatrixXd out(raster.nx(), raster.ny());
  for (int iy = 0; iy < raster.ny(); ++iy) {
    for (int ix = 0; ix < raster.nx(); ++ix) {
      const Point src = torus_wrap(raster.cell_center(ix, iy) - v.offset, w);
      out(ix, iy) = raster.at(src);
    }
  }
  return FieldRaster(w, std::move(out), raster.model());
}

}  // namespace rshift
