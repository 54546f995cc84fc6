#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/pipeline/segment.hpp"
#include "rsnet/quad/episode.hpp"
#include "rsnet/synth/spectra.hpp"

namespace rsnet::pipeline {

struct CampaignConfig {
  int episodes = 200;
  std::vector<std::string> terrains{"asphalt", "brick", "grass", "ice", "sand", "tile"};
  double fixed_mu = 0.5;
  double friction_safety = 0.8;  // informed controller plans with safety * mu_hat
  int scene_px = 48;             // terrain frame seen by the camera
  quad::EpisodeConfig episode;   // true_mu, controller_mu and seed are set per episode
  SegmentOptions segment;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr const char* kFixedVariant = "fixed";
inline constexpr const char* kInformedVariant = "informed";

struct CampaignRow {
  int episode = 0;
  std::string variant;
  std::string terrain;
  double true_mu = 0.0;
  double estimated_mu = 0.0;  // the model's min-friction estimate (same for both variants)
  double controller_mu = 0.0;
  std::uint64_t seed = 0;     // episode seed, shared by both variants
  quad::EpisodeMetrics metrics;
};

struct VariantSummary {
  std::string variant;
  int episodes = 0;
  double success_rate = 0.0;  // percent
  double slippage_mean = 0.0, slippage_std = 0.0;
  double tracking_mean = 0.0, tracking_std = 0.0;
  double effort_mean = 0.0, effort_std = 0.0;
  double tracking_normalized = 0.0;  // mean over the informed variant's mean
  double effort_normalized = 0.0;
  double mpc_failures_mean = 0.0;

  bool operator==(const VariantSummary&) const = default;
};

struct CampaignReport {
  std::vector<CampaignRow> rows;  // episode-major, fixed before informed
  std::vector<VariantSummary> summary;
};

/// Per episode: draw a terrain, render the camera frame, estimate mu from it
/// and run the fixed and informed controllers on the same seed. Episodes run
/// in parallel; rows are stored in episode order.
CampaignReport monte_carlo_quad(const CampaignConfig& config, const model::RsNetModel& friction_model,
                                const std::vector<synth::MaterialSpec>& table, const synth::WavelengthGrid& grid,
                                const synth::ResponseMatrix& r);

/// Aggregates from rows alone (population std). Variants appear in first-seen
/// order; normalization uses the informed variant when present.
std::vector<VariantSummary> summarize(const std::vector<CampaignRow>& rows);

void write_campaign_csv(const std::filesystem::path& path, const std::vector<CampaignRow>& rows);
std::vector<CampaignRow> read_campaign_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, const std::vector<VariantSummary>& summary);

}  // namespace rsnet::pipeline
