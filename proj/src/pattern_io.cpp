#include <algorithm>
#include <filesystem>
#include <iomanip>
#include "json.hpp"
#include <sstream>

#include "rshift/error.hpp"
#include "rshift/io.hpp"
#include "rshift/pointsim.hpp"

namespace rshift {

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void write_pattern_csv(const PointPattern& pattern, const std::string& path) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << (pattern.labeled() ? "x,y,label\n" : "x,y\n");
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    os << pattern.points[i].x() << ',' << pattern.points[i].y();
    if (pattern.labeled()) os << ',' << pattern.labels[i];
    os << '\n';
  }
  const Window& w = pattern.window;
  nlohmann::json side = {{"kind", "pattern"},
                         {"window", {{"x_min", w.x_min()}, {"y_min", w.y_min()}, {"x_max", w.x_max()}, {"y_max", w.y_max()}}},
                         {"count", pattern.size()}};
  write_file_atomic(path, os.str());
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

PointPattern read_pattern_csv(const std::string& path, std::optional<Window> window) {
  if (!window) {
    const std::string side = sidecar_path(path);
    if (!std::filesystem::exists(side)) throw FormatError(path + ": missing window descriptor " + side);
    try {
      const auto j = nlohmann::json::parse(read_file(side));
      const auto& w = j.at("window");
      window = Window(w.at("x_min").get<double>(), w.at("y_min").get<double>(), w.at("x_max").get<double>(),
                      w.at("y_max").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(side + ": " + e.what());
    } catch (const GeometryError& e) {
      throw FormatError(side + ": " + e.what());
    }
  }
  std::istringstream in(read_file(path));
  std::string header;
  if (!std::getline(in, header)) throw FormatError(path + ": empty file");
  header.erase(std::remove_if(header.begin(), header.end(), ::isspace), header.end());
  bool labeled = false;
  if (header == "x,y,label") {
    labeled = true;
  } else if (header != "x,y") {
    throw FormatError(path + ": header must be x,y or x,y,label");
  }
  PointPattern out;
  out.window = *window;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, y;
    if (!(fields >> x >> y)) throw FormatError(path + ": malformed row " + std::to_string(row));
    if (labeled) {
      int label;
      if (!(fields >> label)) throw FormatError(path + ": missing label in row " + std::to_string(row));
      out.labels.push_back(label);
    }
    const Point p(x, y);
    if (!out.window.contains(p)) throw FormatError(path + ": row " + std::to_string(row) + " lies outside the window");
    out.points.push_back(p);
  }
  return out;
}

}  // namespace rshift
