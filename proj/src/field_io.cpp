#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/gaussfield.hpp"
#include "rshift/io.hpp"

namespace rshift {

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_raster_text(const FieldRaster& raster, const std::string& path) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << raster.nx() << ' ' << raster.ny() << '\n';
  const Window& w = raster.window();
  os << w.x_min() << ' ' << w.y_min() << ' ' << w.x_max() << ' ' << w.y_max() << '\n';
  for (int iy = 0; iy < raster.ny(); ++iy) {
    for (int ix = 0; ix < raster.nx(); ++ix) {
      if (ix) os << ' ';
      os << raster.values()(ix, iy);
    }
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

FieldRaster read_raster_text(const std::string& path) {
  std::istringstream in(read_file(path));
  int nx = 0;
  int ny = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  if (!(in >> nx >> ny)) throw FormatError(path + ": missing grid dimensions");
  if (nx < 2 || ny < 2) throw FormatError(path + ": grid must be at least 2x2");
  if (!(in >> x0 >> y0 >> x1 >> y1)) throw FormatError(path + ": missing window bounds");
  Eigen::MatrixXd values(nx, ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (!(in >> values(ix, iy))) {
        throw FormatError(path + ": expected " + std::to_string(nx * ny) + " values");
      }
    }
  }
  std::string extra;
  if (in >> extra) throw FormatError(path + ": trailing data after raster values");
  try {
    return FieldRaster(Window(x0, y0, x1, y1), std::move(values));
  } catch (const GeometryError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_raster_csv(const FieldRaster& raster, const std::string& path) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,y,value\n";
  for (int iy = 0; iy < raster.ny(); ++iy) {
    for (int ix = 0; ix < raster.nx(); ++ix) {
      const Point c = raster.cell_center(ix, iy);
      os << c.x() << ',' << c.y() << ',' << raster.values()(ix, iy) << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

namespace {

// Sorted distinct values, merging entries closer than a relative tolerance.
std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || std::abs(x - out.back()) > 1e-9 * std::max(1.0, std::abs(x))) out.push_back(x);
  }
  return out;
}

}  // namespace

FieldRaster read_raster_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
  if (line != "x,y,value") throw FormatError(path + ": header must be x,y,value");
  std::vector<double> xs, ys, vs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, y, v;
    if (!(fields >> x >> y >> v)) throw FormatError(path + ": malformed row " + std::to_string(row));
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  const auto ux = distinct_sorted(xs);
  const auto uy = distinct_sorted(ys);
  if (ux.size() < 2 || uy.size() < 2) throw FormatError(path + ": raster needs at least 2x2 cells");
  if (ux.size() * uy.size() != xs.size()) {
    throw FormatError(path + ": rows do not form a complete rectangular grid");
  }
  const double dx = (ux.back() - ux.front()) / static_cast<double>(ux.size() - 1);
  const double dy = (uy.back() - uy.front()) / static_cast<double>(uy.size() - 1);
  const int nx = static_cast<int>(ux.size());
  const int ny = static_cast<int>(uy.size());
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(nx, ny, std::nan(""));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const int ix = static_cast<int>(std::lround((xs[k] - ux.front()) / dx));
    const int iy = static_cast<int>(std::lround((ys[k] - uy.front()) / dy));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny || !std::isnan(values(ix, iy))) {
      throw FormatError(path + ": irregular or duplicated cell at row " + std::to_string(k + 2));
    }
    values(ix, iy) = vs[k];
  }
  const Window w(ux.front() - 0.5 * dx, uy.front() - 0.5 * dy, ux.back() + 0.5 * dx, uy.back() + 0.5 * dy);
  return FieldRaster(w, std::move(values));
}

}  // namespace rshift
