#include "rsnet/mppi/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rsnet/util/binary_io.hpp"
#include "rsnet/util/csv.hpp"

namespace rsnet::mppi {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a + pi, 2 * pi);
  if (a <= 0.0) a += 2 * pi;
  return a - pi;
}

GridWorld GridWorld::uniform(int width, int height, double cell_size, double fill) {
  GridWorld w;
  w.width = width;
  w.height = height;
  w.cell_size = cell_size;
  w.cost.assign(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill);
  return w;
}

void GridWorld::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("world: dimensions must be >= 1");
  if (!(cell_size > 0.0)) throw std::invalid_argument("world: cell_size must be positive");
  if (cost.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("world: cost grid must have width*height entries");
  }
  for (double c : cost) {
    if (!(std::isfinite(c) && c >= 0.0)) throw std::invalid_argument("world: costs must be finite and >= 0");
  }
  if (!in_bounds(start.x, start.y)) throw std::invalid_argument("world: start outside bounds");
  if (!in_bounds(goal_x, goal_y)) throw std::invalid_argument("world: goal outside bounds");
  if (patch && (patch->x0 < 0 || patch->y0 < 0 || patch->x1 > width || patch->y1 > height ||
                patch->x0 >= patch->x1 || patch->y0 >= patch->y1)) {
    throw std::invalid_argument("world: patch rectangle must be non-empty and inside the grid");
  }
}

bool GridWorld::in_bounds(double x, double y) const { return x >= 0.0 && y >= 0.0 && x < extent_x() && y < extent_y(); }

int GridWorld::cell_index(double x, double y) const {
  if (!in_bounds(x, y)) return -1;
  const int cx = std::min(width - 1, static_cast<int>(x / cell_size));
  const int cy = std::min(height - 1, static_cast<int>(y / cell_size));
  return cy * width + cx;
}

bool GridWorld::in_patch(double x, double y) const {
  if (!patch) return false;
  const int idx = cell_index(x, y);
  if (idx < 0) return false;
  return patch->contains(idx % width, idx / width);
}

void GridWorld::fill_patch(double value) {
  if (!patch) return;
  for (int cy = patch->y0; cy < patch->y1; ++cy) {
    for (int cx = patch->x0; cx < patch->x1; ++cx) cost_at(cx, cy) = value;
  }
}

void write_world(const std::filesystem::path& path, const GridWorld& world) {
  world.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "rsnet-world 1\n";
  out << "size " << world.width << ' ' << world.height << ' ' << csv::num(world.cell_size) << '\n';
  out << "start " << csv::num(world.start.x) << ' ' << csv::num(world.start.y) << ' '
      << csv::num(world.start.heading) << '\n';
  out << "goal " << csv::num(world.goal_x) << ' ' << csv::num(world.goal_y) << '\n';
  if (world.patch) {
    const auto& p = *world.patch;
    out << "patch " << p.x0 << ' ' << p.y0 << ' ' << p.x1 << ' ' << p.y1 << '\n';
  }
  out << "costs\n";
  for (int cy = 0; cy < world.height; ++cy) {
    for (int cx = 0; cx < world.width; ++cx) out << (cx ? " " : "") << csv::num(world.cost_at(cx, cy));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

GridWorld read_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::FormatError("cannot open world file " + path.string());
  const std::string where = "world file " + path.string() + ": ";
  std::string line;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line() || line != "rsnet-world 1") throw io::FormatError(where + "missing 'rsnet-world 1' header");
  GridWorld w;
  bool have_size = false, have_start = false, have_goal = false;
  while (next_line()) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "costs") break;
    if (key == "size") {
      ss >> w.width >> w.height >> w.cell_size;
      have_size = true;
    } else if (key == "start") {
      ss >> w.start.x >> w.start.y >> w.start.heading;
      have_start = true;
    } else if (key == "goal") {
      ss >> w.goal_x >> w.goal_y;
      have_goal = true;
    } else if (key == "patch") {
      CellRect r;
      ss >> r.x0 >> r.y0 >> r.x1 >> r.y1;
      w.patch = r;
    } else {
      throw io::FormatError(where + "unknown key '" + key + "'");
    }
    if (ss.fail()) throw io::FormatError(where + "bad values for '" + key + "'");
  }
  if (!have_size || !have_start || !have_goal) throw io::FormatError(where + "size, start and goal are required");
  if (w.width < 1 || w.height < 1 || w.width > 100000 || w.height > 100000) {
    throw io::FormatError(where + "bad dimensions");
  }
  w.cost.reserve(static_cast<std::size_t>(w.width) * w.height);
  for (int cy = 0; cy < w.height; ++cy) {
    if (!next_line()) throw io::FormatError(where + "truncated cost grid");
    std::istringstream ss(line);
    for (int cx = 0; cx < w.width; ++cx) {
      double c = 0.0;
      if (!(ss >> c)) throw io::FormatError(where + "row " + std::to_string(cy) + " is short");
      w.cost.push_back(c);
    }
  }
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(where + e.what());
  }
  return w;
}

double ClassCostTable::lookup(const std::string& name) const {
  const auto it = costs.find(name);
  return it == costs.end() ? unknown : it->second;
}

std::vector<double> costmap_from_labels(int width, int height, const std::vector<RegionPrediction>& regions,
                                        const std::vector<std::string>& class_names, const ClassCostTable& table) {
  if (width < 1 || height < 1) throw std::invalid_argument("costmap_from_labels: dimensions must be >= 1");
  const int n = width * height;
  std::vector<double> out(n, table.unknown);
  for (const auto& r : regions) {
    if (r.probabilities.size() != class_names.size()) {
      throw std::invalid_argument("costmap_from_labels: probability vector does not match the class list");
    }
    const auto best = std::max_element(r.probabilities.begin(), r.probabilities.end()) - r.probabilities.begin();
    const double c = table.lookup(class_names[best]);
    for (int idx : r.cells) {
      if (idx < 0 || idx >= n) throw std::invalid_argument("costmap_from_labels: cell index out of range");
      out[idx] = c;
    }
  }
  return out;
}

}  // namespace rsnet::mppi
