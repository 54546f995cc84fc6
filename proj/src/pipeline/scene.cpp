#include "rsnet/pipeline/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rsnet/synth/dataset.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::pipeline {

SceneImage render_scene(int width, int height, std::vector<int> region_map, std::vector<synth::MaterialSpec> materials,
                        const synth::WavelengthGrid& grid, const synth::ResponseMatrix& r, std::uint64_t seed,
                        bool textured) {
  if (width < 1 || height < 1) throw std::invalid_argument("render_scene: dimensions must be >= 1");
  if (region_map.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("render_scene: region map must have width*height entries");
  }
  if (r.bands() != grid.bands) throw std::invalid_argument("render_scene: response matrix does not match grid");
  const int n = static_cast<int>(materials.size());
  for (int id : region_map) {
    if (id < 0 || id >= n) throw std::invalid_argument("render_scene: region id without a material");
  }

  SceneImage scene;
  scene.width = width;
  scene.height = height;
  scene.rgb = nn::Tensor({3, height, width});
  std::vector<int> x0(n, width), y0(n, height), x1(n, 0), y1(n, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int id = region_map[static_cast<std::size_t>(y) * width + x];
      x0[id] = std::min(x0[id], x);
      y0[id] = std::min(y0[id], y);
      x1[id] = std::max(x1[id], x + 1);
      y1[id] = std::max(y1[id], y + 1);
    }
  }
  SpectralSignature pixel(grid.bands);
  for (int id = 0; id < n; ++id) {
    if (x1[id] <= x0[id]) continue;  // material with no pixels
    materials[id].validate();
    const auto base = synth::canonical_spectrum(materials[id], grid);
    // the texture is drawn over the region's bounding square
    const int side = std::max({x1[id] - x0[id], y1[id] - y0[id], 8});
    synth::TextureParams tex = materials[id].texture;
    if (!textured) tex.amplitude = 0.0;
    const auto field = synth::texture_field(side, tex, mix_seed(seed, static_cast<std::uint64_t>(id)));
    for (int y = y0[id]; y < y1[id]; ++y) {
      for (int x = x0[id]; x < x1[id]; ++x) {
        if (region_map[static_cast<std::size_t>(y) * width + x] != id) continue;
        const double f = field[static_cast<std::size_t>(y - y0[id]) * side + (x - x0[id])];
        for (int b = 0; b < grid.bands; ++b) pixel[b] = base[b] * f;
        const synth::Rgb rgb = synth::render_rgb(pixel, r);
        for (int c = 0; c < 3; ++c) scene.rgb.at(c, y, x) = rgb[c];
      }
    }
  }
  scene.region_map = std::move(region_map);
  scene.materials = std::move(materials);
  return scene;
}

SceneImage render_tiles(const std::vector<std::vector<std::string>>& tiles, int tile_px,
                        const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                        const synth::ResponseMatrix& r, std::uint64_t seed, bool textured) {
  if (tiles.empty() || tiles[0].empty()) throw std::invalid_argument("render_tiles: need at least one tile");
  if (tile_px < 1) throw std::invalid_argument("render_tiles: tile_px must be >= 1");
  const int rows = static_cast<int>(tiles.size());
  const int cols = static_cast<int>(tiles[0].size());
  std::vector<synth::MaterialSpec> materials;
  for (const auto& row : tiles) {
    if (static_cast<int>(row.size()) != cols) throw std::invalid_argument("render_tiles: ragged tile layout");
    for (const auto& name : row) materials.push_back(synth::find_material(table, name));
  }
  const int w = cols * tile_px, h = rows * tile_px;
  std::vector<int> map(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) map[static_cast<std::size_t>(y) * w + x] = (y / tile_px) * cols + x / tile_px;
  }
  return render_scene(w, h, std::move(map), std::move(materials), grid, r, seed, textured);
}

void write_image_ppm(const std::filesystem::path& path, const nn::Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw nn::ShapeError("write_image_ppm: expected [3, H, W]");
  const int h = rgb.dim(1), w = rgb.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << w << ' ' << h << "\n255\n";
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb.at(c, y, x), 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rsnet::pipeline
