#include "rsnet/synth/materials.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace rsnet::synth {

void WavelengthGrid::validate() const {
  if (!(start_nm < end_nm)) throw std::invalid_argument("wavelength grid: start_nm must be < end_nm");
  if (bands < 3) throw std::invalid_argument("wavelength grid: at least 3 bands required");
}

void MaterialSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("material: empty name");
  if (!(friction >= kMinFriction && friction <= kMaxFriction)) {
    throw std::invalid_argument("material " + name + ": friction must lie in [0.05, 1.0]");
  }
  for (const auto& b : bumps) {
    if (b.amplitude < 0.0) throw std::invalid_argument("material " + name + ": negative bump amplitude");
    if (!(b.width_nm > 0.0)) throw std::invalid_argument("material " + name + ": bump width must be positive");
  }
  if (texture.amplitude < 0.0 || !(texture.correlation_length_px > 0.0)) {
    throw std::invalid_argument("material " + name + ": invalid texture parameters");
  }
  if (spectrum_override) {
    for (double v : *spectrum_override) {
      if (!(v >= 0.0)) throw std::invalid_argument("material " + name + ": spectrum override must be non-negative");
    }
  }
}

// Reflectance-like shapes loosely following common terrain spectra: vegetation
// has a green bump and a strong near-infrared plateau, ice is bright in the
// blue and absorbs in the NIR, soils and masonry rise towards the red.
std::vector<MaterialSpec> default_training_classes() {
  return {
      {"asphalt", {{980, 260, 0.14}, {470, 50, 0.02}}, {1.0, 0.15}, 0.80, false, {}},
      {"brick", {{690, 90, 0.38}, {900, 150, 0.22}, {500, 60, 0.04}}, {3.0, 0.15}, 0.60, false, {}},
      {"grass", {{550, 28, 0.14}, {860, 110, 0.55}, {450, 30, 0.02}}, {1.5, 0.22}, 0.55, false, {}},
      {"ice", {{440, 110, 0.78}, {600, 120, 0.25}}, {5.0, 0.05}, 0.05, false, {}},
      {"sand", {{760, 220, 0.50}, {560, 70, 0.08}}, {1.0, 0.10}, 0.45, false, {}},
      {"tile", {{520, 180, 0.55}, {820, 90, 0.18}}, {6.0, 0.08}, 0.30, false, {}},
  };
}

std::vector<MaterialSpec> default_heldout_classes() {
  return {
      {"carpet", {{630, 70, 0.30}, {880, 120, 0.15}}, {1.2, 0.20}, 0.70, true, {}},
      {"concrete", {{650, 300, 0.32}}, {2.0, 0.10}, 0.75, true, {}},
      {"gravel", {{720, 300, 0.11}, {920, 70, 0.05}}, {4.0, 0.25}, 0.60, true, {}},
      {"mulch", {{690, 140, 0.22}, {930, 90, 0.10}}, {2.5, 0.20}, 0.50, true, {}},
      {"turf", {{550, 28, 0.10}, {860, 110, 0.40}, {450, 30, 0.015}}, {1.5, 0.20}, 0.55, true, {}},
  };
}

std::vector<MaterialSpec> default_class_table() {
  auto table = default_training_classes();
  for (auto& m : default_heldout_classes()) table.push_back(std::move(m));
  return table;
}

const MaterialSpec& find_material(const std::vector<MaterialSpec>& table, const std::string& name) {
  for (const auto& m : table) {
    if (m.name == name) return m;
  }
  throw std::out_of_range("unknown material class '" + name + "'");
}

std::vector<MaterialSpec> class_table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("classes") || !j["classes"].is_array()) {
    throw std::invalid_argument("class table: expected an object with a 'classes' array");
  }
  std::vector<MaterialSpec> table;
  for (const auto& c : j["classes"]) {
    MaterialSpec m;
    const std::string where = "class table entry " + std::to_string(table.size());
    if (!c.contains("name") || !c["name"].is_string()) throw std::invalid_argument(where + ": 'name' must be a string");
    m.name = c["name"].get<std::string>();
    if (!c.contains("friction") || !c["friction"].is_number()) {
      throw std::invalid_argument(where + " (" + m.name + "): 'friction' must be a number");
    }
    m.friction = c["friction"].get<double>();
    m.held_out = c.value("held_out", false);
    if (!c.contains("bumps") || !c["bumps"].is_array()) {
      throw std::invalid_argument(where + " (" + m.name + "): 'bumps' must be an array");
    }
    for (const auto& b : c["bumps"]) {
      m.bumps.push_back({b.at("center_nm").get<double>(), b.at("width_nm").get<double>(),
                         b.at("amplitude").get<double>()});
    }
    if (c.contains("texture")) {
      m.texture.correlation_length_px = c["texture"].at("correlation_length_px").get<double>();
      m.texture.amplitude = c["texture"].at("amplitude").get<double>();
    }
    m.validate();
    table.push_back(std::move(m));
  }
  return table;
}

nlohmann::json class_table_to_json(const std::vector<MaterialSpec>& table) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : table) {
    nlohmann::json bumps = nlohmann::json::array();
    for (const auto& b : m.bumps) {
      bumps.push_back({{"center_nm", b.center_nm}, {"width_nm", b.width_nm}, {"amplitude", b.amplitude}});
    }
    classes.push_back({{"name", m.name},
                       {"friction", m.friction},
                       {"held_out", m.held_out},
                       {"bumps", bumps},
                       {"texture",
                        {{"correlation_length_px", m.texture.correlation_length_px},
                         {"amplitude", m.texture.amplitude}}}});
  }
  return {{"classes", classes}};
}

}  // namespace rsnet::synth
