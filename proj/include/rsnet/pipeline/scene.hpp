#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsnet/nn/tensor.hpp"
#include "rsnet/synth/spectra.hpp"

namespace rsnet::pipeline {

/// RGB frame composed of homogeneous material regions, with the generating
/// region map kept as ground truth.
struct SceneImage {
  int width = 0;
  int height = 0;
  nn::Tensor rgb;                    // [3, H, W], values in [0, 1]
  std::vector<int> region_map;       // per pixel (row-major), index into `materials`
  std::vector<synth::MaterialSpec> materials;  // one per ground-truth region

  int region_at(int x, int y) const { return region_map[static_cast<std::size_t>(y) * width + x]; }
};

/// Renders each pixel as canonical spectrum x texture through R, exactly as a
/// training patch is rendered. Region textures are independent draws from
/// `seed`; `textured = false` gives piecewise-constant regions.
SceneImage render_scene(int width, int height, std::vector<int> region_map, std::vector<synth::MaterialSpec> materials,
                        const synth::WavelengthGrid& grid, const synth::ResponseMatrix& r, std::uint64_t seed,
                        bool textured = true);

/// Rows of class names, one region per tile of tile_px x tile_px pixels.
SceneImage render_tiles(const std::vector<std::vector<std::string>>& tiles, int tile_px,
                        const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                        const synth::ResponseMatrix& r, std::uint64_t seed, bool textured = true);

/// Binary P6 rendering of a [3, H, W] image.
void write_image_ppm(const std::filesystem::path& path, const nn::Tensor& rgb);

}  // namespace rsnet::pipeline
