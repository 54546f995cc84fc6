#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsnet/quad/mpc.hpp"
#include "rsnet/quad/sim.hpp"

namespace rsnet::quad {

struct EpisodeConfig {
  double duration = 10.0;         // s
  double sim_dt = 0.001;          // 1 kHz ground truth
  double replan_interval = 0.025; // s; the MPC also replans whenever the stance set changes
  double controller_mu = 0.5;
  double true_mu = 0.8;
  double initial_attitude_noise = 0.02;  // rad, uniform half-width on roll and pitch
  double initial_velocity_noise = 0.05;  // m/s, uniform half-width per axis
  MpcConfig mpc;
  GaitSchedule gait;
  RobotParams robot;
  SlipModel slip;
  SrbState body;  // initial body and its mass properties
  std::uint64_t seed = 0;

  void validate() const;
};

/// One trace row per simulation step (sampled after the step).
struct TraceSample {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  ContactForce commanded;
  ContactForce realized;
  StanceMask slip{};
};

using EpisodeTrace = std::vector<TraceSample>;

struct EpisodeMetrics {
  bool success = false;
  double min_height = 0.0;
  double fall_time = -1.0;       // first time the CoM is below the threshold, -1 if never
  double slippage_ratio = 0.0;   // mean commanded |f_t| / f_z over loaded stance samples
  double tracking_cost = 0.0;    // mean (z - z_ref)^2 + (vx - vx_ref)^2 + vy^2
  double effort_cost = 0.0;      // sum of |realized f|^2 over samples and feet
  int slip_samples = 0;          // samples with at least one slipping foot
  int mpc_failures = 0;          // replans that returned no force plan
};

inline constexpr double kSuccessHeight = 0.25;

struct EpisodeResult {
  EpisodeTrace trace;
  EpisodeMetrics metrics;
};

/// Closed-loop trot episode on flat ground of friction true_mu, with the MPC
/// using controller_mu. Deterministic given the config.
EpisodeResult run_episode(const EpisodeConfig& config);

/// Throws std::invalid_argument on an empty trace.
EpisodeMetrics compute_metrics(const EpisodeTrace& trace, const MpcConfig& reference);

/// CSV with time, CoM state, commanded and realized per-foot forces and slip flags.
void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace);

}  // namespace rsnet::quad
