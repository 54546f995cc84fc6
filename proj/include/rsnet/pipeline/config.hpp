#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/mppi/mppi.hpp"
#include "rsnet/pipeline/campaign.hpp"
#include "rsnet/pipeline/segment.hpp"
#include "rsnet/pipeline/wheeled.hpp"
#include "rsnet/quad/episode.hpp"
#include "rsnet/synth/dataset.hpp"

namespace rsnet::pipeline {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainSettings {
  int pretrain_epochs = 20;
  int finetune_epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double alpha = 0.7;
};

struct WheeledSettings {
  WheeledScenario scenario = WheeledScenario::desk();
  int max_steps = 400;
  int seeds = 20;
};

struct BenchSettings {
  int frames = 20;
  int tile_px = 48;
  std::vector<std::vector<std::string>> layout{{"asphalt", "brick", "grass"}, {"ice", "sand", "tile"}};
};

/// Everything a CLI run depends on besides its input files.
struct PipelineConfig {
  std::uint64_t seed = 0;
  synth::WavelengthGrid grid;
  std::array<double, 3> response_centers_nm{460.0, 550.0, 620.0};
  double response_width_nm = 40.0;
  std::vector<synth::MaterialSpec> classes = synth::default_class_table();
  synth::DatasetConfig data;
  model::RsNetConfig model = model::RsNetConfig::desk();
  TrainSettings train;
  quad::EpisodeConfig quad;  // sim-quad episode; also the campaign's episode template
  CampaignConfig campaign;
  SegmentOptions segment;
  mppi::MppiConfig mppi;
  WheeledSettings wheeled;
  BenchSettings bench;

  synth::ResponseMatrix response() const;
  std::vector<std::string> training_class_names() const;
  /// Campaign settings with the shared quad and segment sections applied.
  CampaignConfig campaign_config() const;
  /// Throws ConfigError naming the section.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and wrong types are errors.
PipelineConfig config_from_json(const nlohmann::json& j);
/// Throws ConfigError for unreadable files, bad JSON and bad fields.
PipelineConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration; config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const PipelineConfig& config);

}  // namespace rsnet::pipeline
