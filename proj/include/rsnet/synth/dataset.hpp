#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsnet/nn/tensor.hpp"
#include "rsnet/synth/spectra.hpp"

namespace rsnet::synth {

struct TrainingSample {
  std::string id;
  std::string class_name;
  int class_label = -1;  // index into the training classes; -1 for held-out classes
  nn::Tensor rgb_patch;  // [3, S, S], values in [0, 1]
  SpectralSignature spectrum;  // patch-mean spectrum
  double friction = 0.5;
};

/// Multiplicative texture field max(0, 1 + amplitude * n) over size x size
/// pixels, where n is Gaussian-filtered white noise standardized to zero mean
/// and unit variance over the patch.
std::vector<double> texture_field(int size, const TextureParams& texture, std::uint64_t seed);

/// Renders one textured patch: per-pixel spectrum = canonical * texture *
/// brightness, per-pixel RGB through `r`; the target is the patch mean.
TrainingSample gen_patch(const MaterialSpec& spec, const WavelengthGrid& grid, const ResponseMatrix& r, int size,
                         std::uint64_t seed, double brightness = 1.0);

struct MetamerPair {
  SpectralSignature first;
  SpectralSignature second;
  TextureParams first_texture;
  TextureParams second_texture;
  int attempts = 0;
};

/// Builds a second spectrum with the same sensor response as `base` by adding
/// a perturbation from the null space of R. Throws after 100 failed draws.
MetamerPair make_metamer_pair(const MaterialSpec& base, const ResponseMatrix& r, const WavelengthGrid& grid,
                              std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetConfig {
  int n_per_class = 60;
  int n_heldout_per_class = 10;
  int patch_size = 32;
  SplitRatios split;
  double brightness_min = 0.8;
  double brightness_max = 1.2;
};

struct Dataset {
  std::vector<std::string> class_names;  // training classes in label order
  std::vector<TrainingSample> train, val, test;
  std::vector<TrainingSample> heldout;  // held-out classes only
};

/// Pure function of (table, grid, R, config, seed). Samples are ordered by
/// (class, index).
Dataset gen_dataset(const std::vector<MaterialSpec>& table, const WavelengthGrid& grid, const ResponseMatrix& r,
                    const DatasetConfig& config, std::uint64_t seed);

/// Writes manifest.csv, spectra.csv and patches/<id>.bin under `dir`.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

void write_patch(const nn::Tensor& patch, const std::filesystem::path& path);
nn::Tensor read_patch(const std::filesystem::path& path);

}  // namespace rsnet::synth
