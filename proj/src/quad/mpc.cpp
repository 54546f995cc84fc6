#include "rsnet/quad/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rsnet::quad {

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("mpc: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("mpc: timestep must be positive");
  const bool weights_ok = weight_z >= 0 && weight_vx >= 0 && weight_vy >= 0 && weight_omega.minCoeff() >= 0 &&
                          weight_roll >= 0 && weight_pitch >= 0 && control_penalty >= 0;
  if (!weights_ok) throw std::invalid_argument("mpc: weights must be non-negative");
  if (!(reference_accel > 0.0)) throw std::invalid_argument("mpc: reference_accel must be positive");
  if (!(mu >= 0.05 && mu <= 1.0)) throw std::invalid_argument("mpc: mu must lie in [0.05, 1.0]");
}

StateVec MpcConfig::state_weights() const {
  StateVec q = StateVec::Zero();
  q(0) = weight_roll;
  q(1) = weight_pitch;
  q(5) = weight_z;
  q.segment<3>(6) = weight_omega;
  q(9) = weight_vx;
  q(10) = weight_vy;
  return q;
}

void GaitSchedule::validate() const {
  if (!(frequency > 0.0)) throw std::invalid_argument("gait: frequency must be positive");
  if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("gait: duty factor must be in (0, 1)");
  if (!(swing_height >= 0.0)) throw std::invalid_argument("gait: swing height must be >= 0");
}

double GaitSchedule::phase(int foot, double t) const {
  const double x = t * frequency + offsets.at(foot);
  double p = x - std::floor(x);
  // guard against rounding right below an integer boundary
  if (p >= 1.0 - 1e-12) p = 0.0;
  return p;
}

StanceMask GaitSchedule::stance(double t) const {
  StanceMask m{};
  for (int i = 0; i < kFeet; ++i) m[i] = in_stance(i, t);
  return m;
}

double GaitSchedule::next_touchdown(int foot, double t) const {
  const double p = phase(foot, t);
  if (p == 0.0) return t;
  return t + (1.0 - p) * period();
}

double FrictionPyramid::tangent_bound() const { return mu / std::sqrt(2.0); }

double FrictionPyramid::slack(const Vec3& f) const { return (h - g * f).minCoeff(); }

double FrictionPyramid::cone_slack(const Vec3& f, double mu) { return mu * f.z() - std::hypot(f.x(), f.y()); }

FrictionPyramid pyramid_constraints(double mu, double f_max) {
  if (!(mu > 0.0)) throw std::invalid_argument("pyramid_constraints: mu must be positive");
  if (!(f_max > 0.0)) throw std::invalid_argument("pyramid_constraints: f_max must be positive");
  FrictionPyramid p;
  p.mu = mu;
  p.f_max = f_max;
  const double c = p.tangent_bound();
  p.g << 1, 0, -c,  //
      -1, 0, -c,    //
      0, 1, -c,     //
      0, -1, -c,    //
      0, 0, -1,     //
      0, 0, 1;
  p.h << 0, 0, 0, 0, 0, f_max;
  return p;
}

const char* to_string(MpcStatus s) {
  switch (s) {
    case MpcStatus::optimal:
      return "optimal";
    case MpcStatus::infeasible:
      return "infeasible";
    case MpcStatus::max_iterations:
      return "max_iterations";
  }
  return "unknown";
}

double force_limit(const SrbState& state, const RobotParams& robot) { return 2.0 * state.mass * robot.gravity; }

double reference_speed(const MpcConfig& config, const SrbState& state, double tau) {
  const double v0 = state.velocity.x();
  const double dv = config.desired_speed - v0;
  const double reach = config.reference_accel * std::max(tau, 0.0);
  return v0 + std::clamp(dv, -reach, reach);
}

double reference_distance(const MpcConfig& config, const SrbState& state, double tau) {
  const double v0 = state.velocity.x();
  const double dv = config.desired_speed - v0;
  const double a = std::copysign(config.reference_accel, dv);
  const double t_ramp = std::abs(dv) / config.reference_accel;
  if (tau <= t_ramp) return v0 * tau + 0.5 * a * tau * tau;
  return v0 * t_ramp + 0.5 * a * t_ramp * t_ramp + config.desired_speed * (tau - t_ramp);
}

Reference make_reference(const MpcConfig& config, const SrbState& state, double gravity) {
  const Mat3 rz = Eigen::AngleAxisd(state.rpy.z(), Vec3::UnitZ()).toRotationMatrix();
  Reference ref;
  for (int k = 1; k <= config.horizon; ++k) {
    const double tau = k * config.dt;
    SrbState r;
    r.rpy = {0.0, 0.0, state.rpy.z()};
    r.position = state.position + rz * Vec3{reference_distance(config, state, tau), 0.0, 0.0};
    r.position.z() = config.desired_height;
    r.velocity = rz * Vec3{reference_speed(config, state, tau), 0.0, 0.0};
    r.omega = Vec3::Zero();
    ref.push_back(r.to_vector(gravity));
  }
  return ref;
}

Vec3 raibert_foothold(const Vec3& hip, const Vec3& velocity, const Vec3& desired, double stance_duration,
                      double height, double gravity) {
  const double k = std::sqrt(std::max(height, 1e-3) / gravity);
  Vec3 f = hip + 0.5 * stance_duration * velocity + k * (velocity - desired);
  f.z() = 0.0;
  return f;
}

Vec3 touchdown_foothold(const MpcConfig& config, const GaitSchedule& gait, const RobotParams& robot,
                        const SrbState& state, int foot) {
  const Mat3 rz = Eigen::AngleAxisd(state.rpy.z(), Vec3::UnitZ()).toRotationMatrix();
  const Vec3 hip = state.position + rotation_from_rpy(state.rpy) *
                                        Vec3{robot.hip_offsets[foot].x(), robot.hip_offsets[foot].y(), 0.0};
  const Vec3 target = rz * Vec3{reference_speed(config, state, 0.5 * gait.stance_duration()), 0.0, 0.0};
  return raibert_foothold(hip, state.velocity, target, gait.stance_duration(), config.desired_height, robot.gravity);
}

std::vector<HorizonStep> plan_contacts(const MpcConfig& config, const GaitSchedule& gait, const RobotParams& robot,
                                       const SrbState& state, const FootArray& current_feet, double t) {
  const Mat3 rz = Eigen::AngleAxisd(state.rpy.z(), Vec3::UnitZ()).toRotationMatrix();
  std::vector<HorizonStep> steps(config.horizon);
  for (int k = 0; k < config.horizon; ++k) {
    const double tk = t + k * config.dt;
    for (int i = 0; i < kFeet; ++i) {
      if (!gait.in_stance(i, tk)) continue;
      steps[k].stance[i] = true;
      const double touchdown = tk - gait.phase(i, tk) * gait.period();
      if (touchdown <= t + 1e-12 && gait.in_stance(i, t)) {
        steps[k].feet[i] = current_feet[i];
        continue;
      }
      // the body is predicted to follow the reference; the capture term vanishes
      const double tau = touchdown - t;
      Vec3 com = state.position + rz * Vec3{reference_distance(config, state, tau), 0.0, 0.0};
      const Vec3 vel = rz * Vec3{reference_speed(config, state, tau), 0.0, 0.0};
      const Vec3 hip = com + rz * Vec3{robot.hip_offsets[i].x(), robot.hip_offsets[i].y(), 0.0};
      steps[k].feet[i] = raibert_foothold(hip, vel, vel, gait.stance_duration(), config.desired_height, robot.gravity);
    }
  }
  return steps;
}

namespace {

bool any_stance(const StanceMask& m) {
  for (bool s : m) {
    if (s) return true;
  }
  return false;
}

}  // namespace

MpcQp build_mpc_qp(const MpcConfig& config, const RobotParams& robot, const SrbState& state,
                   const std::vector<HorizonStep>& contacts, const Reference& reference) {
  config.validate();
  state.validate();
  const int n = config.horizon;
  if (static_cast<int>(contacts.size()) != n || static_cast<int>(reference.size()) != n) {
    throw std::invalid_argument("build_mpc_qp: contacts and reference must have one entry per horizon step");
  }
  const double yaw = state.rpy.z();
  const StateVec x0 = state.to_vector(robot.gravity);

  MpcQp out;
  std::vector<InputMat> b(n, InputMat::Zero());
  for (int k = 0; k < n; ++k) {
    if (!any_stance(contacts[k].stance)) continue;
    const Vec3 com = k == 0 ? state.position : Vec3(reference[k - 1].segment<3>(3));
    b[k] = linearize_dynamics_about(yaw, com, contacts[k].feet, contacts[k].stance, config.dt, state.mass,
                                    state.inertia)
               .b;
    for (int i = 0; i < kFeet; ++i) {
      if (contacts[k].stance[i]) out.variables.emplace_back(k, i);
    }
  }
  StanceMask all{true, true, true, true};
  FootArray dummy{};
  const StateMat a =
      linearize_dynamics_about(yaw, state.position, dummy, all, config.dt, state.mass, state.inertia).a;

  const int nv = 3 * static_cast<int>(out.variables.size());
  const int rows = kStateDim * n;
  // powers of A: apow[k] = A^k
  std::vector<StateMat> apow(n + 1);
  apow[0] = StateMat::Identity();
  for (int k = 1; k <= n; ++k) apow[k] = a * apow[k - 1];

  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(rows, nv);
  for (std::size_t v = 0; v < out.variables.size(); ++v) {
    const auto [j, foot] = out.variables[v];
    const Eigen::Matrix<double, kStateDim, 3> bj = b[j].block<kStateDim, 3>(0, 3 * foot);
    for (int k = j + 1; k <= n; ++k) {
      phi.block(kStateDim * (k - 1), 3 * static_cast<int>(v), kStateDim, 3) = apow[k - 1 - j] * bj;
    }
  }
  Eigen::VectorXd err(rows);
  for (int k = 1; k <= n; ++k) err.segment<kStateDim>(kStateDim * (k - 1)) = apow[k] * x0 - reference[k - 1];

  const StateVec q = config.state_weights();
  Eigen::VectorXd qbar(rows);
  for (int k = 0; k < n; ++k) qbar.segment<kStateDim>(kStateDim * k) = q;
  const Eigen::MatrixXd qphi = qbar.asDiagonal() * phi;

  auto& qp = out.qp;
  qp.hessian = 2.0 * (phi.transpose() * qphi);
  qp.hessian.diagonal().array() += 2.0 * config.control_penalty;
  qp.linear = 2.0 * (qphi.transpose() * err);
  qp.constant = err.dot(qbar.cwiseProduct(err));

  const FrictionPyramid pyr = pyramid_constraints(config.mu, force_limit(state, robot));
  const int nb = static_cast<int>(out.variables.size());
  qp.g = Eigen::MatrixXd::Zero(6 * nb, nv);
  qp.h = Eigen::VectorXd::Zero(6 * nb);
  out.start = Eigen::VectorXd::Zero(nv);
  for (int v = 0; v < nb; ++v) {
    qp.g.block<6, 3>(6 * v, 3 * v) = pyr.g;
    qp.h.segment<6>(6 * v) = pyr.h;
    out.start(3 * v + 2) = 0.5 * pyr.f_max;
  }
  return out;
}

MpcSolution solve_mpc(const MpcConfig& config, const RobotParams& robot, const SrbState& state,
                      const std::vector<HorizonStep>& contacts, const Reference& reference, const QpOptions& options) {
  MpcSolution sol;
  sol.forces.assign(config.horizon, FootArray{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  for (const auto& c : contacts) sol.stance.push_back(c.stance);
  const double f_max = force_limit(state, robot);
  if (state.mass * robot.gravity > kFeet * f_max) return sol;
  bool any = false;
  for (const auto& c : contacts) any = any || any_stance(c.stance);
  if (!any) return sol;

  const MpcQp m = build_mpc_qp(config, robot, state, contacts, reference);
  const QpResult r = solve_qp_ipm(m.qp, m.start, options);
  switch (r.status) {
    case QpStatus::optimal:
      sol.status = MpcStatus::optimal;
      break;
    case QpStatus::infeasible:
      sol.status = MpcStatus::infeasible;
      return sol;
    case QpStatus::max_iterations:
      sol.status = MpcStatus::max_iterations;
      break;
  }
  const FrictionPyramid pyr = pyramid_constraints(config.mu, f_max);
  sol.min_pyramid_slack = std::numeric_limits<double>::infinity();
  sol.min_cone_slack = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < m.variables.size(); ++v) {
    const auto [k, foot] = m.variables[v];
    const Vec3 f = r.u.segment<3>(3 * static_cast<int>(v));
    sol.forces[k][foot] = f;
    sol.min_pyramid_slack = std::min(sol.min_pyramid_slack, pyr.slack(f));
    sol.min_cone_slack = std::min(sol.min_cone_slack, FrictionPyramid::cone_slack(f, config.mu));
  }
  sol.objective = r.objective;
  sol.kkt_residual = r.kkt_residual;
  sol.iterations = r.iterations;
  return sol;
}

}  // namespace rsnet::quad
