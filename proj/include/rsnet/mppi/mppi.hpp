#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsnet/mppi/world.hpp"

namespace rsnet::mppi {

struct Control {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s

  bool operator==(const Control&) const = default;
};

using ControlSeq = std::vector<Control>;

struct CostWeights {
  double terrain = 20.0;        // per second, times the cell cost under the robot
  double goal = 1.0;            // per second, times the distance to the goal
  double control = 0.01;        // per second, times v^2 + w^2
  double out_of_bounds = 100.0; // per second outside the grid
  double terminal_goal = 10.0;  // times the final distance to the goal
};

struct MppiConfig {
  int samples = 1024;
  double horizon = 5.0;  // s
  double dt = 0.05;      // s
  double max_v = 2.0;
  double max_w = 3.0;
  double lambda = 1.0;
  double noise_v = 0.6;  // 0.3 * max_v
  double noise_w = 0.9;  // 0.3 * max_w
  CostWeights weights;
  double goal_radius = 0.3;

  void validate() const;
  int steps() const;
  Control clamp(Control c) const;
};

UnicycleState step_unicycle(const UnicycleState& s, const Control& c, double dt);

struct Rollout {
  std::vector<UnicycleState> states;  // steps + 1, starting with the initial state
  double cost = 0.0;
};

/// Integrates the (clamped) controls and sums dt-weighted stage costs plus the
/// terminal goal term. Stage k is charged at the state reached after control k.
Rollout rollout(const GridWorld& world, const MppiConfig& config, const UnicycleState& state,
                const ControlSeq& controls);
/// Cost only, without storing states.
double rollout_cost(const GridWorld& world, const MppiConfig& config, const UnicycleState& state,
                    const ControlSeq& controls);

/// Normalized exp(-(c - min c) / lambda).
std::vector<double> mppi_weights(const std::vector<double>& costs, double lambda);

struct MppiUpdate {
  ControlSeq controls;  // weighted mean of the sampled sequences
  std::vector<double> costs;
  std::vector<double> weights;
};

// Sample i, step k, channel c draws its noise from counter_normal(seed, ...),
// so both variants produce identical results for any thread count.
namespace serial {
MppiUpdate mppi_update(const MppiConfig& config, const GridWorld& world, const UnicycleState& state,
                       const ControlSeq& nominal, std::uint64_t seed);
}
namespace parallel {
MppiUpdate mppi_update(const MppiConfig& config, const GridWorld& world, const UnicycleState& state,
                       const ControlSeq& nominal, std::uint64_t seed);
}
using parallel::mppi_update;

/// Perturbed, clamped control sequence of sample i.
ControlSeq sample_controls(const MppiConfig& config, const ControlSeq& nominal, std::uint64_t seed, int sample);

enum class PlanOutcome { reached, timeout };

const char* to_string(PlanOutcome o);

struct PlanResult {
  PlanOutcome outcome = PlanOutcome::timeout;
  std::vector<UnicycleState> states;  // executed, including the start
  ControlSeq controls;                // executed
  double time_to_goal = 0.0;          // s, elapsed time at termination
  double path_length = 0.0;
  int patch_samples = 0;              // executed states inside the patch
};

/// Receding-horizon loop: update, execute the first control, shift.
PlanResult plan_to_goal(const GridWorld& world, const MppiConfig& config, int max_steps, std::uint64_t seed);

/// step,time,x,y,heading,v,w (controls applied from that state; empty on the last row).
void write_trajectory_csv(const std::filesystem::path& path, const PlanResult& plan, double dt);

/// Cost map shaded green (low) to brown (high), the patch outlined, each
/// path drawn in its own colour, start and goal marked. Binary P6.
void write_ppm(const std::filesystem::path& path, const GridWorld& world, const std::vector<PlanResult>& paths,
               int pixels_per_cell = 8);

}  // namespace rsnet::mppi
