#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/mppi/mppi.hpp"
#include "rsnet/pipeline/scene.hpp"
#include "rsnet/pipeline/segment.hpp"

namespace rsnet::pipeline {

/// Field geometry plus the materials on it. The world's own cost grid is
/// ignored; costs come from the classifier (terrain-aware) or are zero
/// (baseline).
struct WheeledScenario {
  mppi::GridWorld world;
  std::string ground_class = "brick";
  std::string patch_class = "grass";
  int pixels_per_cell = 4;
  mppi::ClassCostTable costs;

  /// 12 m x 8 m field of 0.25 m cells; the grass patch covers the start-goal
  /// diagonal, off centre.
  static WheeledScenario desk();
  void validate() const;
};

/// Overhead frame of the scenario, one pixel block per cell.
SceneImage render_overhead(const WheeledScenario& scenario, const std::vector<synth::MaterialSpec>& table,
                           const synth::WavelengthGrid& grid, const synth::ResponseMatrix& r, std::uint64_t seed);

struct TerrainLayer {
  std::vector<double> cost;                      // per cell
  std::vector<std::string> region_classes;       // argmax class per segmented region ("" if skipped)
  std::vector<mppi::RegionPrediction> predictions;
};

/// Segment the frame, classify each region's patch, and give every cell the
/// cost of the region under its centre pixel.
TerrainLayer terrain_layer(const WheeledScenario& scenario, const SceneImage& frame,
                           const model::RsNetModel& classifier, const std::vector<std::string>& class_names,
                           const SegmentOptions& options);

struct WheeledReport {
  mppi::GridWorld baseline_world;  // geometry only: every cost zero
  mppi::GridWorld aware_world;     // classifier cost layer
  TerrainLayer layer;
  mppi::PlanResult baseline;
  mppi::PlanResult aware;
};

/// Both planner conditions with identical MPPI settings and seed. Throws
/// std::invalid_argument without a classification head.
WheeledReport run_wheeled_comparison(const WheeledScenario& scenario, const model::RsNetModel& classifier,
                                     const std::vector<std::string>& class_names,
                                     const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                                     const synth::ResponseMatrix& r, const mppi::MppiConfig& config, int max_steps,
                                     std::uint64_t seed, const SegmentOptions& options = {});

}  // namespace rsnet::pipeline
