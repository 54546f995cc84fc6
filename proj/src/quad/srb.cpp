#include "rsnet/quad/srb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsnet::quad {

void RobotParams::validate() const {
  if (!(gravity > 0.0)) throw std::invalid_argument("robot: gravity must be positive");
  if (!(max_leg_length > 0.0)) throw std::invalid_argument("robot: max_leg_length must be positive");
  if (!(body_contact_height >= 0.0)) throw std::invalid_argument("robot: body_contact_height must be >= 0");
}

void SrbState::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("srb state: mass must be positive");
  if (!(inertia.minCoeff() > 0.0)) throw std::invalid_argument("srb state: inertia entries must be positive");
}

StateVec SrbState::to_vector(double gravity) const {
  StateVec x;
  x << rpy, position, omega, velocity, -gravity;
  return x;
}

SrbState SrbState::from_vector(const StateVec& x, double mass, const Vec3& inertia) {
  SrbState s;
  s.rpy = x.segment<3>(0);
  s.position = x.segment<3>(3);
  s.omega = x.segment<3>(6);
  s.velocity = x.segment<3>(9);
  s.mass = mass;
  s.inertia = inertia;
  return s;
}

Mat3 rotation_from_rpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 rpy_from_rotation(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

StateVec srb_derivative(const StateVec& x, const Eigen::Matrix<double, kInputDim, 1>& u, const FootArray& feet,
                        const StanceMask& stance, double mass, const Vec3& inertia) {
  const Vec3 rpy = x.segment<3>(0);
  const Vec3 p = x.segment<3>(3);
  const Vec3 w = x.segment<3>(6);
  const Vec3 v = x.segment<3>(9);
  const double cp = std::cos(rpy.y()), sy = std::sin(rpy.z()), cy = std::cos(rpy.z()), tp = std::tan(rpy.y());

  StateVec dx = StateVec::Zero();
  dx(0) = (cy * w.x() + sy * w.y()) / cp;
  dx(1) = -sy * w.x() + cy * w.y();
  dx(2) = cy * tp * w.x() + sy * tp * w.y() + w.z();
  dx.segment<3>(3) = v;

  const Mat3 r = rotation_from_rpy(rpy);
  const Mat3 iw = r * inertia.asDiagonal() * r.transpose();
  Vec3 force = Vec3::Zero(), torque = Vec3::Zero();
  for (int i = 0; i < kFeet; ++i) {
    if (!stance[i]) continue;
    const Vec3 f = u.segment<3>(3 * i);
    force += f;
    torque += (feet[i] - p).cross(f);
  }
  dx.segment<3>(6) = iw.ldlt().solve(torque - w.cross(iw * w));
  dx.segment<3>(9) = force / mass;
  dx(11) += x(12);
  return dx;
}

StateVec srb_step(const StateVec& x, const Eigen::Matrix<double, kInputDim, 1>& u, const FootArray& feet,
                  const StanceMask& stance, double mass, const Vec3& inertia, double dt) {
  StateVec next = x;
  next.tail<7>() += dt * srb_derivative(x, u, feet, stance, mass, inertia).tail<7>();
  StateVec mid = x;
  mid.tail<7>() = next.tail<7>();
  next.head<6>() += dt * srb_derivative(mid, u, feet, stance, mass, inertia).head<6>();
  return next;
}

LinearSystem linearize_dynamics_about(double yaw, const Vec3& com, const FootArray& feet, const StanceMask& stance,
                                      double dt, double mass, const Vec3& inertia) {
  if (!(dt > 0.0)) throw std::invalid_argument("linearize_dynamics: dt must be positive");
  bool any = false;
  for (bool s : stance) any = any || s;
  if (!any) throw std::invalid_argument("linearize_dynamics: no stance feet, the body has no actuation");

  const Mat3 rz = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 iw_inv = (rz * inertia.asDiagonal() * rz.transpose()).inverse();
  StateMat ac = StateMat::Zero();
  ac.block<3, 3>(0, 6) = rz.transpose();
  ac.block<3, 3>(3, 9) = Mat3::Identity();
  ac(11, 12) = 1.0;
  InputMat bc = InputMat::Zero();
  for (int i = 0; i < kFeet; ++i) {
    if (!stance[i]) continue;
    bc.block<3, 3>(6, 3 * i) = iw_inv * skew(feet[i] - com);
    bc.block<3, 3>(9, 3 * i) = Mat3::Identity() / mass;
  }
  // semi-implicit Euler: velocities first, then poses from the new velocities
  StateMat vel_step = StateMat::Identity();
  vel_step.bottomRows<7>() += dt * ac.bottomRows<7>();
  StateMat pose_step = StateMat::Identity();
  pose_step.topRows<6>() += dt * ac.topRows<6>();
  return {pose_step * vel_step, pose_step * (bc * dt)};
}

LinearSystem linearize_dynamics(const SrbState& state, const FootArray& feet, const StanceMask& stance, double dt) {
  state.validate();
  return linearize_dynamics_about(state.rpy.z(), state.position, feet, stance, dt, state.mass, state.inertia);
}

}  // namespace rsnet::quad
