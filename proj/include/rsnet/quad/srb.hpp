#pragma once

#include <array>

#include <Eigen/Dense>

namespace rsnet::quad {

inline constexpr int kFeet = 4;
inline constexpr int kStateDim = 13;
inline constexpr int kInputDim = 3 * kFeet;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// [roll, pitch, yaw, p (3), omega world (3), v (3), gravity state (-g)]
using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMat = Eigen::Matrix<double, kStateDim, kInputDim>;
using FootArray = std::array<Vec3, kFeet>;
using StanceMask = std::array<bool, kFeet>;

/// Geometry and limits of the quadruped. Feet order: FL, FR, RL, RR.
struct RobotParams {
  double gravity = 9.81;
  std::array<Eigen::Vector2d, kFeet> hip_offsets{Eigen::Vector2d{0.19, 0.13}, Eigen::Vector2d{0.19, -0.13},
                                                 Eigen::Vector2d{-0.19, 0.13}, Eigen::Vector2d{-0.19, -0.13}};
  double max_leg_length = 0.40;
  double body_contact_height = 0.08;  // CoM height at which the body touches the ground

  void validate() const;
};

struct SrbState {
  Vec3 position{0.0, 0.0, 0.32};
  Vec3 rpy = Vec3::Zero();  // roll, pitch, yaw (ZYX convention)
  Vec3 velocity = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // world frame
  double mass = 12.0;
  Vec3 inertia{0.08, 0.20, 0.22};  // body-frame diagonal

  void validate() const;
  StateVec to_vector(double gravity) const;
  static SrbState from_vector(const StateVec& x, double mass, const Vec3& inertia);
};

Mat3 rotation_from_rpy(const Vec3& rpy);
Vec3 rpy_from_rotation(const Mat3& r);
Mat3 skew(const Vec3& v);

/// Nonlinear continuous-time SRB model: Euler-angle kinematics, world-frame
/// inertia R I R^T with the gyroscopic term, lever arms foot - CoM.
StateVec srb_derivative(const StateVec& x, const Eigen::Matrix<double, kInputDim, 1>& u, const FootArray& feet,
                        const StanceMask& stance, double mass, const Vec3& inertia);

/// Semi-implicit Euler step of the nonlinear model: angular and linear
/// velocities advance first, poses follow with the updated velocities.
StateVec srb_step(const StateVec& x, const Eigen::Matrix<double, kInputDim, 1>& u, const FootArray& feet,
                  const StanceMask& stance, double mass, const Vec3& inertia, double dt);

struct LinearSystem {
  StateMat a;
  InputMat b;  // columns of swing feet are zero
};

/// Semi-implicit Euler discretization (as in srb_step) of the SRB model
/// linearized about yaw, with Ac, Bc evaluated at roll = pitch = 0.
/// Throws std::invalid_argument without stance feet.
LinearSystem linearize_dynamics(const SrbState& state, const FootArray& feet, const StanceMask& stance, double dt);

/// Same, with the yaw angle and lever-arm origin given explicitly.
LinearSystem linearize_dynamics_about(double yaw, const Vec3& com, const FootArray& feet, const StanceMask& stance,
                                      double dt, double mass, const Vec3& inertia);

}  // namespace rsnet::quad
