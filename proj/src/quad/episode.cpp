#include "rsnet/quad/episode.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::quad {

void EpisodeConfig::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("episode: duration must be positive");
  if (!(sim_dt > 0.0)) throw std::invalid_argument("episode: sim_dt must be positive");
  if (!(replan_interval >= sim_dt)) throw std::invalid_argument("episode: replan_interval must be >= sim_dt");
  if (!(true_mu > 0.0)) throw std::invalid_argument("episode: true_mu must be positive");
  MpcConfig m = mpc;
  m.mu = controller_mu;
  m.validate();
  gait.validate();
  robot.validate();
  slip.validate();
  body.validate();
}

EpisodeResult run_episode(const EpisodeConfig& config) {
  config.validate();
  MpcConfig mpc = config.mpc;
  mpc.mu = config.controller_mu;
  const RobotParams& robot = config.robot;
  const GaitSchedule& gait = config.gait;

  Rng rng(config.seed);
  SrbState body = config.body;
  body.rpy.x() += rng.uniform(-1.0, 1.0) * config.initial_attitude_noise;
  body.rpy.y() += rng.uniform(-1.0, 1.0) * config.initial_attitude_noise;
  for (int a = 0; a < 3; ++a) body.velocity[a] += rng.uniform(-1.0, 1.0) * config.initial_velocity_noise;
  SimState sim = SimState::standing(robot, body);

  const long steps = std::lround(config.duration / config.sim_dt);
  const long replan_every = std::max(1L, std::lround(config.replan_interval / config.sim_dt));

  EpisodeResult out;
  out.trace.reserve(steps);
  ContactForce command;
  StanceMask previous = gait.stance(0.0);
  long last_plan = -replan_every;
  int failures = 0;

  for (long s = 0; s < steps; ++s) {
    const double t = s * config.sim_dt;
    const StanceMask stance = gait.stance(t);
    bool changed = false;
    for (int i = 0; i < kFeet; ++i) {
      if (stance[i] && !previous[i]) {
        // touchdown: footholds from the measured state
        sim.feet[i] = touchdown_foothold(mpc, gait, robot, sim.body, i);
        sim.lost[i] = false;
      }
      changed = changed || stance[i] != previous[i];
    }
    previous = stance;

    if (changed || s - last_plan >= replan_every) {
      last_plan = s;
      const auto contacts = plan_contacts(mpc, gait, robot, sim.body, sim.feet, t);
      const auto reference = make_reference(mpc, sim.body, robot.gravity);
      const MpcSolution sol = solve_mpc(mpc, robot, sim.body, contacts, reference);
      command = ContactForce{};
      if (sol.status == MpcStatus::infeasible) {
        ++failures;
      } else {
        command.force = sol.first();
      }
    }
    command.stance = stance;
    for (int i = 0; i < kFeet; ++i) {
      if (!stance[i]) command.force[i] = Vec3::Zero();
    }

    StepResult r = simulate_step(config.true_mu, sim, command, config.sim_dt, robot, config.slip);
    sim = std::move(r.next);
    TraceSample row;
    row.time = sim.time;
    row.position = sim.body.position;
    row.rpy = sim.body.rpy;
    row.velocity = sim.body.velocity;
    row.omega = sim.body.omega;
    row.commanded = command;
    row.realized = r.realized;
    row.slip = r.slip;
    out.trace.push_back(row);
  }
  out.metrics = compute_metrics(out.trace, mpc);
  out.metrics.mpc_failures = failures;
  return out;
}

EpisodeMetrics compute_metrics(const EpisodeTrace& trace, const MpcConfig& reference) {
  if (trace.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  EpisodeMetrics m;
  m.min_height = trace.front().position.z();
  double ratio_sum = 0.0;
  long ratio_count = 0;
  double track = 0.0;
  for (const auto& row : trace) {
    const double z = row.position.z();
    m.min_height = std::min(m.min_height, z);
    if (z <= kSuccessHeight && m.fall_time < 0.0) m.fall_time = row.time;
    const double ez = z - reference.desired_height;
    const double evx = row.velocity.x() - reference.desired_speed;
    const double evy = row.velocity.y();
    track += ez * ez + evx * evx + evy * evy;
    bool slipped = false;
    for (int i = 0; i < kFeet; ++i) {
      slipped = slipped || row.slip[i];
      m.effort_cost += row.realized.force[i].squaredNorm();
      if (!row.commanded.stance[i]) continue;
      const Vec3& f = row.commanded.force[i];
      if (f.z() > 1e-9) {
        ratio_sum += std::hypot(f.x(), f.y()) / f.z();
        ++ratio_count;
      }
    }
    if (slipped) ++m.slip_samples;
  }
  m.success = m.min_height > kSuccessHeight;
  m.slippage_ratio = ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
  m.tracking_cost = track / static_cast<double>(trace.size());
  return m;
}

void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time,x,y,z,roll,pitch,yaw,vx,vy,vz,wx,wy,wz";
  static const char* const names[kFeet] = {"fl", "fr", "rl", "rr"};
  for (const char* kind : {"cmd", "real"}) {
    for (const char* foot : names) out << ',' << kind << '_' << foot << "_fx," << kind << '_' << foot << "_fy,"
                                  << kind << '_' << foot << "_fz";
  }
  for (const char* foot : names) out << ",stance_" << foot;
  for (const char* foot : names) out << ",slip_" << foot;
  out << '\n';
  for (const auto& row : trace) {
    out << csv::num(row.time);
    for (const Vec3* v : {&row.position, &row.rpy, &row.velocity, &row.omega}) {
      for (int a = 0; a < 3; ++a) out << ',' << csv::num((*v)[a]);
    }
    for (const ContactForce* c : {&row.commanded, &row.realized}) {
      for (int i = 0; i < kFeet; ++i) {
        for (int a = 0; a < 3; ++a) out << ',' << csv::num(c->force[i][a]);
      }
    }
    for (int i = 0; i < kFeet; ++i) out << ',' << (row.commanded.stance[i] ? 1 : 0);
    for (int i = 0; i < kFeet; ++i) out << ',' << (row.slip[i] ? 1 : 0);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rsnet::quad
