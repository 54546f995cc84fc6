#include "rsnet/quad/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsnet::quad {

void SlipModel::validate() const {
  if (!(slide_gain >= 0.0)) throw std::invalid_argument("slip model: slide_gain must be >= 0");
  if (!(max_slide_speed >= 0.0)) throw std::invalid_argument("slip model: max_slide_speed must be >= 0");
  if (!(body_damping >= 0.0)) throw std::invalid_argument("slip model: body_damping must be >= 0");
}

SimState SimState::standing(const RobotParams& robot, const SrbState& body) {
  SimState s;
  s.body = body;
  s.rotation = rotation_from_rpy(body.rpy);
  for (int i = 0; i < kFeet; ++i) {
    s.feet[i] = s.hip_world(robot, i);
    s.feet[i].z() = 0.0;
  }
  return s;
}

Vec3 SimState::hip_world(const RobotParams& robot, int foot) const {
  const auto& o = robot.hip_offsets[foot];
  return body.position + rotation * Vec3{o.x(), o.y(), 0.0};
}

double SimState::energy(double gravity) const {
  const Mat3 iw = rotation * body.inertia.asDiagonal() * rotation.transpose();
  return 0.5 * body.mass * body.velocity.squaredNorm() + 0.5 * body.omega.dot(iw * body.omega) +
         body.mass * gravity * body.position.z();
}

namespace {

Mat3 exp_so3(const Vec3& w) {
  const double a = w.norm();
  if (a < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

}  // namespace

StepResult simulate_step(double true_mu, const SimState& state, const ContactForce& commanded, double dt,
                         const RobotParams& robot, const SlipModel& slip) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_step: dt must be positive");
  StepResult out;
  out.next = state;
  SimState& n = out.next;
  const SrbState& b = state.body;

  Vec3 force = Vec3::Zero(), torque = Vec3::Zero();
  for (int i = 0; i < kFeet; ++i) {
    out.realized.stance[i] = commanded.stance[i];
    if (!commanded.stance[i]) {
      n.lost[i] = false;
      continue;
    }
    if (state.lost[i] || (state.feet[i] - state.hip_world(robot, i)).norm() > robot.max_leg_length) {
      n.lost[i] = true;
      continue;
    }
    const Vec3& c = commanded.force[i];
    const double fz = std::max(0.0, c.z());
    const double cap = std::max(0.0, true_mu) * fz;
    Eigen::Vector2d t{c.x(), c.y()};
    const double tn = t.norm();
    if (tn > cap) {
      out.slip[i] = true;
      out.any_slip = true;
      const Eigen::Vector2d dir = t / tn;
      const double excess = cap > 0.0 ? tn / cap - 1.0 : slip.max_slide_speed / std::max(slip.slide_gain, 1e-12);
      const double speed = std::min(slip.max_slide_speed, slip.slide_gain * excess);
      t = dir * cap;
      n.feet[i].head<2>() -= speed * dt * dir;
    }
    const Vec3 f{t.x(), t.y(), fz};
    out.realized.force[i] = f;
    force += f;
    torque += (state.feet[i] - b.position).cross(f);
  }

  // translation
  Vec3 v = b.velocity + dt * (force / b.mass - Vec3{0.0, 0.0, robot.gravity});
  const double floor = robot.body_contact_height;
  bool grounded = false;
  if (b.position.z() + dt * v.z() <= floor && v.z() <= 0.0) {
    grounded = true;
    // stop exactly at the floor; inelastic impact
    v.z() = std::min(0.0, (floor - b.position.z()) / dt);
    const double dv = robot.gravity * std::max(true_mu, 0.0) * dt;
    const double speed = v.head<2>().norm();
    v.head<2>() *= speed > dv ? (speed - dv) / speed : 0.0;
  }
  n.body.velocity = v;
  n.body.position = b.position + dt * v;
  if (grounded) n.body.position.z() = std::max(n.body.position.z(), std::min(floor, b.position.z()));

  // rotation: impulse on the world angular momentum, then a drift that keeps
  // the rotational energy
  const Mat3 iw = state.rotation * b.inertia.asDiagonal() * state.rotation.transpose();
  Vec3 l = iw * b.omega + dt * torque;
  if (grounded) l *= std::exp(-slip.body_damping * dt);
  const Vec3 w_mid = iw.ldlt().solve(l);
  const double e_before = 0.5 * l.dot(w_mid);
  n.rotation = state.rotation * exp_so3(dt * (state.rotation.transpose() * w_mid));
  // re-orthonormalize against drift
  Eigen::JacobiSVD<Mat3> svd(n.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  n.rotation = svd.matrixU() * svd.matrixV().transpose();
  const Mat3 iw_new = n.rotation * b.inertia.asDiagonal() * n.rotation.transpose();
  Vec3 w = iw_new.ldlt().solve(l);
  const double e_after = 0.5 * l.dot(w);
  if (e_after > 0.0) w *= std::sqrt(e_before / e_after);
  n.body.omega = w;
  n.body.rpy = rpy_from_rotation(n.rotation);
  n.time = state.time + dt;
  return out;
}

}  // namespace rsnet::quad
