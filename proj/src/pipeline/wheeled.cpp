#include "rsnet/pipeline/wheeled.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsnet/pipeline/inference.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::pipeline {

WheeledScenario WheeledScenario::desk() {
  WheeledScenario s;
  s.world = mppi::GridWorld::uniform(48, 32, 0.25);
  s.world.start = {1.0, 1.0, std::atan2(6.0, 10.0)};
  s.world.goal_x = 11.0;
  s.world.goal_y = 7.0;
  s.world.patch = mppi::CellRect{16, 10, 32, 22};
  return s;
}

void WheeledScenario::validate() const {
  world.validate();
  if (!world.patch) throw std::invalid_argument("wheeled: the world needs a patch rectangle");
  if (pixels_per_cell < 1) throw std::invalid_argument("wheeled: pixels_per_cell must be >= 1");
  if (ground_class == patch_class) throw std::invalid_argument("wheeled: ground and patch classes must differ");
}

SceneImage render_overhead(const WheeledScenario& scenario, const std::vector<synth::MaterialSpec>& table,
                           const synth::WavelengthGrid& grid, const synth::ResponseMatrix& r, std::uint64_t seed) {
  scenario.validate();
  const auto& w = scenario.world;
  const int ppc = scenario.pixels_per_cell;
  const int width = w.width * ppc, height = w.height * ppc;
  std::vector<int> map(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) map[static_cast<std::size_t>(y) * width + x] = w.patch->contains(x / ppc, y / ppc);
  }
  return render_scene(width, height, std::move(map),
                      {synth::find_material(table, scenario.ground_class), synth::find_material(table, scenario.patch_class)},
                      grid, r, seed);
}

TerrainLayer terrain_layer(const WheeledScenario& scenario, const SceneImage& frame,
                           const model::RsNetModel& classifier, const std::vector<std::string>& class_names,
                           const SegmentOptions& options) {
  require_head(classifier, model::HeadKind::classification, "terrain_layer");
  const auto& w = scenario.world;
  const int ppc = scenario.pixels_per_cell;
  if (frame.width != w.width * ppc || frame.height != w.height * ppc) {
    throw std::invalid_argument("terrain_layer: frame does not match the world grid");
  }
  const Segmentation seg = segment_patches(frame.rgb, options);
  const auto outputs = predict_patches(classifier, seg.patches);

  TerrainLayer layer;
  std::vector<std::vector<int>> cells(seg.regions.size());
  for (int cy = 0; cy < w.height; ++cy) {
    for (int cx = 0; cx < w.width; ++cx) {
      const int px = cx * ppc + ppc / 2, py = cy * ppc + ppc / 2;
      cells[seg.labels[static_cast<std::size_t>(py) * frame.width + px]].push_back(cy * w.width + cx);
    }
  }
  for (const Region& region : seg.regions) {
    if (region.patch < 0) {
      layer.region_classes.emplace_back();
      continue;
    }
    const auto& out = outputs[region.patch];
    if (out.probabilities.size() != class_names.size()) {
      throw std::invalid_argument("terrain_layer: classifier outputs do not match the class list");
    }
    layer.region_classes.push_back(class_names[out.argmax()]);
    layer.predictions.push_back({cells[region.id], out.probabilities});
  }
  layer.cost = mppi::costmap_from_labels(w.width, w.height, layer.predictions, class_names, scenario.costs);
  return layer;
}

WheeledReport run_wheeled_comparison(const WheeledScenario& scenario, const model::RsNetModel& classifier,
                                     const std::vector<std::string>& class_names,
                                     const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                                     const synth::ResponseMatrix& r, const mppi::MppiConfig& config, int max_steps,
                                     std::uint64_t seed, const SegmentOptions& options) {
  require_head(classifier, model::HeadKind::classification, "run_wheeled_comparison");
  config.validate();
  const SceneImage frame = render_overhead(scenario, table, grid, r, mix_seed(seed, 0x5ce7e));
  WheeledReport report;
  report.layer = terrain_layer(scenario, frame, classifier, class_names, options);
  report.baseline_world = scenario.world;
  std::fill(report.baseline_world.cost.begin(), report.baseline_world.cost.end(), 0.0);
  report.aware_world = scenario.world;
  report.aware_world.cost = report.layer.cost;
  report.baseline = mppi::plan_to_goal(report.baseline_world, config, max_steps, seed);
  report.aware = mppi::plan_to_goal(report.aware_world, config, max_steps, seed);
  return report;
}

}  // namespace rsnet::pipeline
