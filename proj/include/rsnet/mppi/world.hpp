#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rsnet::mppi {

/// Heading is kept in (-pi, pi].
struct UnicycleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

double wrap_angle(double a);

/// Half-open cell rectangle [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int cx, int cy) const { return cx >= x0 && cx < x1 && cy >= y0 && cy < y1; }
  int area() const { return (x1 - x0) * (y1 - y0); }
};

/// Planar grid with one terrain cost per cell; cell (cx, cy) covers
/// [cx*s, (cx+1)*s) x [cy*s, (cy+1)*s) in metres. Costs are row-major by y.
struct GridWorld {
  int width = 0;
  int height = 0;
  double cell_size = 0.25;
  std::vector<double> cost;
  UnicycleState start;
  double goal_x = 0.0;
  double goal_y = 0.0;
  std::optional<CellRect> patch;  // high-cost material patch, if any

  /// Uniform world of `fill` cost.
  static GridWorld uniform(int width, int height, double cell_size, double fill = 0.0);

  void validate() const;
  double extent_x() const { return width * cell_size; }
  double extent_y() const { return height * cell_size; }
  bool in_bounds(double x, double y) const;
  /// Cell index of a point, -1 outside the grid.
  int cell_index(double x, double y) const;
  double cost_at(int cx, int cy) const { return cost[static_cast<std::size_t>(cy) * width + cx]; }
  double& cost_at(int cx, int cy) { return cost[static_cast<std::size_t>(cy) * width + cx]; }
  bool in_patch(double x, double y) const;
  /// Sets every patch cell to `value`.
  void fill_patch(double value);
};

// World file format (plain text, '#' starts a comment line):
//   rsnet-world 1
//   size <width> <height> <cell_size>
//   start <x> <y> <heading>
//   goal <x> <y>
//   patch <x0> <y0> <x1> <y1>        (optional, cell rectangle)
//   costs
//   <height rows of width costs, row y = 0 first>
void write_world(const std::filesystem::path& path, const GridWorld& world);
/// Throws io::FormatError on malformed content.
GridWorld read_world(const std::filesystem::path& path);

/// Traversal cost per terrain class, with a fallback for uncovered cells.
struct ClassCostTable {
  std::map<std::string, double> costs{{"asphalt", 0.1}, {"tile", 0.2}, {"brick", 0.3}, {"sand", 0.8},
                                      {"grass", 1.0},   {"ice", 2.0}};
  double unknown = 1.5;

  double lookup(const std::string& name) const;
};

/// One predicted region of the world: the cells it covers and class
/// probabilities in `class_names` order.
struct RegionPrediction {
  std::vector<int> cells;  // row-major cell indices
  std::vector<double> probabilities;
};

/// Per-cell cost of the argmax class of its region; cells no region covers
/// get table.unknown. Throws std::invalid_argument on a probability vector of
/// the wrong length or an out-of-range cell.
std::vector<double> costmap_from_labels(int width, int height, const std::vector<RegionPrediction>& regions,
                                        const std::vector<std::string>& class_names, const ClassCostTable& table);

}  // namespace rsnet::mppi
