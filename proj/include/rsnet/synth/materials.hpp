#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rsnet::synth {

/// Uniformly spaced wavelength axis.
struct WavelengthGrid {
  double start_nm = 400.0;
  double end_nm = 1000.0;
  int bands = 64;

  double wavelength(int band) const { return start_nm + (end_nm - start_nm) * band / (bands - 1); }
  double spacing() const { return (end_nm - start_nm) / (bands - 1); }
  void validate() const;
};

struct GaussianBump {
  double center_nm = 550.0;
  double width_nm = 50.0;  // standard deviation
  double amplitude = 0.0;
};

/// Spatially correlated multiplicative texture: Gaussian-filtered white noise
/// with the given correlation length (filter sigma, pixels) and amplitude.
struct TextureParams {
  double correlation_length_px = 1.0;
  double amplitude = 0.1;
};

struct MaterialSpec {
  std::string name;
  std::vector<GaussianBump> bumps;
  TextureParams texture;
  double friction = 0.5;
  bool held_out = false;
  /// When set, replaces the bump mixture (used for constructed metamers).
  std::optional<std::vector<double>> spectrum_override;

  void validate() const;
};

inline constexpr double kMinFriction = 0.05;
inline constexpr double kMaxFriction = 1.0;

/// Training classes in label order: asphalt, brick, grass, ice, sand, tile.
std::vector<MaterialSpec> default_training_classes();
/// Held-out classes: carpet, concrete, gravel, mulch, turf.
std::vector<MaterialSpec> default_heldout_classes();
/// Training classes followed by held-out classes.
std::vector<MaterialSpec> default_class_table();

const MaterialSpec& find_material(const std::vector<MaterialSpec>& table, const std::string& name);

/// Class table file: {"classes": [{"name", "friction", "held_out",
/// "bumps": [{"center_nm", "width_nm", "amplitude"}],
/// "texture": {"correlation_length_px", "amplitude"}}]}.
std::vector<MaterialSpec> class_table_from_json(const nlohmann::json& j);
nlohmann::json class_table_to_json(const std::vector<MaterialSpec>& table);

}  // namespace rsnet::synth
