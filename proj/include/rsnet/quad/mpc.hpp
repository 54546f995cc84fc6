#pragma once

#include <vector>

#include "rsnet/quad/qp.hpp"
#include "rsnet/quad/srb.hpp"

namespace rsnet::quad {

struct MpcConfig {
  int horizon = 10;
  double dt = 0.05;
  double weight_z = 50.0;
  double weight_vx = 10.0;
  double weight_vy = 5.0;
  Vec3 weight_omega{0.2, 0.2, 1.0};
  double weight_roll = 0.2;
  double weight_pitch = 0.2;
  double control_penalty = 1e-6;
  double mu = 0.5;
  double desired_height = 0.32;
  double desired_speed = 0.5;
  double reference_accel = 0.3;  // m/s^2, ramp of the reference speed toward desired_speed

  void validate() const;
  /// Diagonal of the per-step state weight, in StateVec order.
  StateVec state_weights() const;
};

struct GaitSchedule {
  double frequency = 2.75;
  double duty = 0.5;
  double swing_height = 0.10;
  /// Phase offsets per foot; trot pairs FL+RR and FR+RL.
  std::array<double, kFeet> offsets{0.0, 0.5, 0.5, 0.0};

  void validate() const;
  double period() const { return 1.0 / frequency; }
  double stance_duration() const { return duty / frequency; }
  /// Phase of `foot` in [0, 1); stance while phase < duty.
  double phase(int foot, double t) const;
  bool in_stance(int foot, double t) const { return phase(foot, t) < duty; }
  StanceMask stance(double t) const;
  /// Time of the next touchdown of `foot` strictly after t (t itself if
  /// the foot touches down exactly at t).
  double next_touchdown(int foot, double t) const;
};

/// Inner square pyramid per stance foot: rows of G f <= h for
/// |fx| <= (mu/sqrt2) fz, |fy| <= (mu/sqrt2) fz, 0 <= fz <= f_max.
struct FrictionPyramid {
  double mu = 0.5;
  double f_max = 0.0;
  Eigen::Matrix<double, 6, 3> g;
  Eigen::Matrix<double, 6, 1> h;

  double tangent_bound() const;  // mu / sqrt(2)
  /// Minimum of h - G f.
  double slack(const Vec3& f) const;
  bool feasible(const Vec3& f, double tol = 0.0) const { return slack(f) >= -tol; }
  /// mu fz - ||(fx, fy)||: slack of the exact cone.
  static double cone_slack(const Vec3& f, double mu);
};

/// Throws std::invalid_argument for mu <= 0 or f_max <= 0.
FrictionPyramid pyramid_constraints(double mu, double f_max);

/// Contact plan for one horizon step.
struct HorizonStep {
  StanceMask stance{};
  FootArray feet{};
};

/// Reference states x_1..x_N.
using Reference = std::vector<StateVec>;

/// Reference at the desired height whose forward speed ramps from the
/// measured speed to desired_speed at reference_accel, starting from the
/// current planar position and yaw.
Reference make_reference(const MpcConfig& config, const SrbState& state, double gravity);

/// Predicted contact schedule: current stance feet keep their footholds,
/// feet that touch down inside the horizon land at Raibert footholds of the
/// reference trajectory.
std::vector<HorizonStep> plan_contacts(const MpcConfig& config, const GaitSchedule& gait, const RobotParams& robot,
                                       const SrbState& state, const FootArray& current_feet, double t);

/// Forward speed and distance of the reference `tau` seconds ahead.
double reference_speed(const MpcConfig& config, const SrbState& state, double tau);
double reference_distance(const MpcConfig& config, const SrbState& state, double tau);

/// Foothold for a touchdown at the hip position `hip`, with the body moving
/// at `velocity` while the desired velocity is `desired`.
Vec3 raibert_foothold(const Vec3& hip, const Vec3& velocity, const Vec3& desired, double stance_duration,
                      double height, double gravity);

/// Raibert foothold for `foot` touching down now, from the measured state.
Vec3 touchdown_foothold(const MpcConfig& config, const GaitSchedule& gait, const RobotParams& robot,
                        const SrbState& state, int foot);

enum class MpcStatus { optimal, infeasible, max_iterations };

const char* to_string(MpcStatus s);

struct MpcSolution {
  MpcStatus status = MpcStatus::infeasible;
  std::vector<FootArray> forces;  // per horizon step, zero for swing feet
  std::vector<StanceMask> stance;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double min_pyramid_slack = 0.0;
  double min_cone_slack = 0.0;
  int iterations = 0;

  const FootArray& first() const { return forces.front(); }
};

/// Condensed QP over the stance-foot forces of every horizon step, including
/// the constant term so that `objective` is the full cost.
struct MpcQp {
  QpProblem qp;
  std::vector<std::pair<int, int>> variables;  // (step, foot) of each 3-block
  Eigen::VectorXd start;                        // strictly feasible start
};

MpcQp build_mpc_qp(const MpcConfig& config, const RobotParams& robot, const SrbState& state,
                   const std::vector<HorizonStep>& contacts, const Reference& reference);

/// Status `infeasible` when the weight cannot be carried (m g > 4 f_max) or
/// no step of the horizon has a stance foot.
MpcSolution solve_mpc(const MpcConfig& config, const RobotParams& robot, const SrbState& state,
                      const std::vector<HorizonStep>& contacts, const Reference& reference,
                      const QpOptions& options = {});

double force_limit(const SrbState& state, const RobotParams& robot);

}  // namespace rsnet::quad
