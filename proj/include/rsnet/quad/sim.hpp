#pragma once

#include "rsnet/quad/srb.hpp"

namespace rsnet::quad {

/// Per-foot force with a stance flag. Swing feet carry zero force.
struct ContactForce {
  FootArray force{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  StanceMask stance{};
};

/// Foot sliding when the commanded tangential force exceeds the Coulomb cap.
/// Slide speed = min(max_slide_speed, slide_gain * (|f_t| / cap - 1)).
struct SlipModel {
  double slide_gain = 4.0;       // m/s per unit of relative excess demand
  double max_slide_speed = 2.0;  // m/s
  double body_damping = 5.0;     // 1/s, angular damping while the body is on the ground

  void validate() const;
};

struct SimState {
  SrbState body;
  Mat3 rotation = Mat3::Identity();  // master copy of the attitude; body.rpy is derived from it
  FootArray feet{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  StanceMask lost{};  // foot has slid out of reach and carries no load until its next touchdown
  double time = 0.0;

  /// Level body at its default pose with the feet under the hips.
  static SimState standing(const RobotParams& robot, const SrbState& body = {});
  Vec3 hip_world(const RobotParams& robot, int foot) const;
  double energy(double gravity) const;
};

struct StepResult {
  SimState next;
  ContactForce realized;
  StanceMask slip{};
  bool any_slip = false;
};

/// One semi-implicit Euler step of the ground-truth simulator.
///
/// Stance feet whose leg exceeds max_leg_length, or that are marked lost,
/// produce no force. Otherwise f_z = max(0, commanded f_z) and the
/// tangential force is capped at true_mu * f_z preserving direction; excess
/// demand flags slip and makes the foot slide against the applied force.
/// Throws std::invalid_argument for dt <= 0.
StepResult simulate_step(double true_mu, const SimState& state, const ContactForce& commanded, double dt,
                         const RobotParams& robot, const SlipModel& slip = {});

}  // namespace rsnet::quad
