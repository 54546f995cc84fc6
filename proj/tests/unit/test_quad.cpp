#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "qp_oracle.hpp"
#include "quad_instances.hpp"
#include "rsnet/quad/episode.hpp"
#include "rsnet/util/rng.hpp"

using namespace rsnet;
using namespace rsnet::quad;

namespace {

constexpr StanceMask kAll{true, true, true, true};

Eigen::Matrix<double, kInputDim, 1> stack(const FootArray& f) {
  Eigen::Matrix<double, kInputDim, 1> u;
  for (int i = 0; i < kFeet; ++i) u.segment<3>(3 * i) = f[i];
  return u;
}

FootArray vertical(double fz) {
  FootArray f;
  for (auto& v : f) v = {0.0, 0.0, fz};
  return f;
}

StateVec nonlinear_step(const StateVec& x, const Eigen::Matrix<double, kInputDim, 1>& u, const FootArray& feet,
                    const StanceMask& stance, const SrbState& s, double dt) {
  return srb_step(x, u, feet, stance, s.mass, s.inertia, dt);
}

}  // namespace

TEST_CASE("trot gait keeps exactly two diagonal feet in stance") {
  GaitSchedule g;
  for (int k = 0; k < 2000; ++k) {
    const double t = 0.0011 * k;
    const StanceMask m = g.stance(t);
    CHECK(m[0] + m[1] + m[2] + m[3] == 2);
    CHECK(m[0] == m[3]);
    CHECK(m[1] == m[2]);
  }
  CHECK(g.stance_duration() == doctest::Approx(0.5 / 2.75));
  GaitSchedule bad;
  bad.frequency = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("linearization: ballistic and force balance limits") {
  SrbState s;
  const double dt = 0.05;
  const FootArray feet = SimState::standing(RobotParams{}, s).feet;
  const LinearSystem sys = linearize_dynamics(s, feet, kAll, dt);
  const StateVec x0 = s.to_vector(9.81);

  const StateVec x1 = sys.a * x0;
  CHECK((x1.head<2>() - x0.head<2>()).norm() < 1e-15);
  CHECK(x1(5) == doctest::Approx(x0(5) - 9.81 * dt * dt));
  CHECK(x1(11) == doctest::Approx(-9.81 * dt));

  const StateVec x2 = sys.a * x0 + sys.b * stack(vertical(s.mass * 9.81 / 4));
  CHECK(std::abs(x2(11)) < 1e-12);
  CHECK(x2(5) == doctest::Approx(x0(5)));
  CHECK(x2.segment<3>(6).norm() < 1e-12);

  StanceMask none{};
  CHECK_THROWS_AS(linearize_dynamics(s, feet, none, dt), std::invalid_argument);
  CHECK_THROWS_AS(linearize_dynamics(s, feet, kAll, 0.0), std::invalid_argument);
}

TEST_CASE("linearization matches finite differences of the nonlinear step") {
  Rng rng(5);
  const double dt = 0.05, h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    SrbState s;
    s.rpy = {0.0, 0.0, rng.uniform(-3.0, 3.0)};
    s.position = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.25, 0.35)};
    s.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    s.inertia = {rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)};
    FootArray feet;
    for (auto& f : feet) f = {rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3), 0.0};
    StanceMask stance{rng.uniform() < 0.5, rng.uniform() < 0.5, true, rng.uniform() < 0.5};
    const LinearSystem sys = linearize_dynamics(s, feet, stance, dt);
    const StateVec x = s.to_vector(9.81);
    const Eigen::Matrix<double, kInputDim, 1> u0 = Eigen::Matrix<double, kInputDim, 1>::Zero();

    StateMat a_fd;
    for (int j = 0; j < kStateDim; ++j) {
      StateVec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      a_fd.col(j) = (nonlinear_step(xp, u0, feet, stance, s, dt) - nonlinear_step(xm, u0, feet, stance, s, dt)) / (2 * h);
    }
    CHECK((a_fd - sys.a).cwiseAbs().maxCoeff() < 1e-6);

    InputMat b_fd;
    for (int j = 0; j < kInputDim; ++j) {
      Eigen::Matrix<double, kInputDim, 1> up = u0, um = u0;
      up(j) += h;
      um(j) -= h;
      b_fd.col(j) = (nonlinear_step(x, up, feet, stance, s, dt) - nonlinear_step(x, um, feet, stance, s, dt)) / (2 * h);
    }
    CHECK((b_fd - sys.b).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("friction pyramid examples") {
  const FrictionPyramid p = pyramid_constraints(0.5, 500.0);
  CHECK(p.feasible({0, 0, 100}));
  CHECK(pyramid_constraints(0.05, 500.0).feasible({0, 0, 100}));
  CHECK(p.tangent_bound() * 100 == doctest::Approx(35.355).epsilon(1e-4));
  CHECK_FALSE(p.feasible({35.4, 35.4, 100}));
  CHECK(p.feasible({35.0, 35.0, 100}));
  CHECK(std::hypot(35.0, 35.0) == doctest::Approx(49.497).epsilon(1e-4));
  CHECK(FrictionPyramid::cone_slack({35.0, 35.0, 100}, 0.5) > 0.0);
  CHECK(p.tangent_bound() / pyramid_constraints(0.05, 500.0).tangent_bound() == doctest::Approx(10.0));
  CHECK_FALSE(p.feasible({0, 0, 501}));
  CHECK_FALSE(p.feasible({0, 0, -1}));
  CHECK_THROWS_AS(pyramid_constraints(0.0, 500.0), std::invalid_argument);
  CHECK_THROWS_AS(pyramid_constraints(-0.1, 500.0), std::invalid_argument);
}

TEST_CASE("pyramid-feasible forces lie inside the exact cone") {
  Rng rng(11);
  int feasible = 0;
  for (int i = 0; i < 10000; ++i) {
    const double mu = rng.uniform(0.05, 1.0);
    const FrictionPyramid p = pyramid_constraints(mu, 300.0);
    const double fz = rng.uniform(0.0, 300.0);
    const double c = p.tangent_bound() * fz;
    const Vec3 f{rng.uniform(-c, c), rng.uniform(-c, c), fz};
    REQUIRE(p.feasible(f));
    ++feasible;
    CHECK(std::hypot(f.x(), f.y()) <= mu * f.z() + 1e-12);
  }
  CHECK(feasible == 10000);
}

TEST_CASE("hover: symmetric stance carries the weight evenly") {
  MpcConfig c;
  c.desired_speed = 0.0;
  RobotParams robot;
  SrbState s;
  std::vector<HorizonStep> steps(c.horizon);
  for (auto& st : steps) {
    st.stance = kAll;
    st.feet = SimState::standing(robot, s).feet;
  }
  const MpcSolution sol = solve_mpc(c, robot, s, steps, make_reference(c, s, robot.gravity));
  REQUIRE(sol.status == MpcStatus::optimal);
  double sum = 0.0;
  for (const Vec3& f : sol.first()) sum += f.z();
  CHECK(sum == doctest::Approx(s.mass * robot.gravity).epsilon(1e-3 / 117.72));
  for (const Vec3& f : sol.first()) CHECK(f.z() == doctest::Approx(sum / 4).epsilon(1e-4));
  CHECK(sol.kkt_residual < 1e-6);
  CHECK(sol.min_cone_slack >= -1e-6);
}

TEST_CASE("MPC solutions satisfy the cone and the KKT conditions") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto in = instances::random_instance(seed);
    const MpcSolution sol = solve_mpc(in.config, in.robot, in.state, in.contacts, in.reference);
    REQUIRE(sol.status == MpcStatus::optimal);
    CHECK(sol.kkt_residual < 1e-6);
    CHECK(sol.min_pyramid_slack >= -1e-6);
    CHECK(sol.min_cone_slack >= -1e-6);
    for (std::size_t k = 0; k < sol.forces.size(); ++k) {
      for (int i = 0; i < kFeet; ++i) {
        if (!sol.stance[k][i]) CHECK(sol.forces[k][i].norm() == 0.0);
      }
    }
  }
}

TEST_CASE("MPC objective matches the projected-gradient oracle") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto in = instances::random_instance(seed, 4);
    const MpcQp m = build_mpc_qp(in.config, in.robot, in.state, in.contacts, in.reference);
    const QpResult ipm = solve_qp_ipm(m.qp, m.start);
    REQUIRE(ipm.status == QpStatus::optimal);
    const oracle::Result ref = oracle::solve(m.qp, m.start);
    CHECK(std::abs(ipm.objective - ref.objective) <= 1e-4 * std::abs(ref.objective));
    CHECK(ipm.objective <= ref.objective + 1e-9 * std::abs(ref.objective));
  }
}

TEST_CASE("larger mu never raises the optimal objective") {
  for (std::uint64_t seed = 300; seed < 310; ++seed) {
    auto in = instances::random_instance(seed);
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {0.1, 0.3, 0.5, 0.8}) {
      in.config.mu = mu;
      const MpcSolution sol = solve_mpc(in.config, in.robot, in.state, in.contacts, in.reference);
      REQUIRE(sol.status == MpcStatus::optimal);
      CHECK(sol.objective <= prev * (1 + 1e-9) + 1e-12);
      prev = sol.objective;
    }
  }
}

TEST_CASE("MPC without stance feet is reported infeasible") {
  MpcConfig c;
  RobotParams robot;
  SrbState s;
  std::vector<HorizonStep> steps(c.horizon);
  const MpcSolution sol = solve_mpc(c, robot, s, steps, make_reference(c, s, robot.gravity));
  CHECK(sol.status == MpcStatus::infeasible);
  MpcConfig bad;
  bad.mu = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("IPM rejects an infeasible start") {
  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Identity(1, 1);
  qp.linear = Eigen::VectorXd::Zero(1);
  qp.g = Eigen::MatrixXd::Ones(1, 1);
  qp.h = Eigen::VectorXd::Ones(1);
  CHECK(solve_qp_ipm(qp, Eigen::VectorXd::Constant(1, 2.0)).status == QpStatus::infeasible);
  const QpResult r = solve_qp_ipm(qp, Eigen::VectorXd::Zero(1));
  CHECK(r.status == QpStatus::optimal);
  CHECK(std::abs(r.u(0)) < 1e-8);
}

TEST_CASE("simulator: Coulomb cap") {
  RobotParams robot;
  const SimState s = SimState::standing(robot);
  ContactForce cmd;
  cmd.stance = {true, false, false, true};
  cmd.force[0] = {5, 3, 60};
  cmd.force[3] = {-4, 2, 58};

  const StepResult ok = simulate_step(0.5, s, cmd, 0.001, robot);
  CHECK_FALSE(ok.any_slip);
  CHECK(ok.realized.force[0] == cmd.force[0]);
  CHECK(ok.realized.force[3] == cmd.force[3]);
  CHECK(ok.realized.force[1].norm() == 0.0);
  CHECK(ok.next.feet[0] == s.feet[0]);

  // tangential demand of twice the cap
  const double mu = 0.05;
  ContactForce hard = cmd;
  hard.force[0] = {2 * mu * 60 * 0.6, 2 * mu * 60 * 0.8, 60};
  const StepResult sl = simulate_step(mu, s, hard, 0.001, robot);
  CHECK(sl.slip[0]);
  CHECK(sl.any_slip);
  const Vec3& f = sl.realized.force[0];
  CHECK(std::hypot(f.x(), f.y()) == doctest::Approx(mu * 60).epsilon(1e-12));
  CHECK(f.x() / f.y() == doctest::Approx(0.75));
  CHECK(f.z() == 60.0);
  // foot slides against the applied force
  CHECK(sl.next.feet[0].x() < s.feet[0].x());
  CHECK(sl.next.feet[0].y() < s.feet[0].y());

  CHECK_THROWS_AS(simulate_step(0.5, s, cmd, 0.0, robot), std::invalid_argument);
}

TEST_CASE("simulator: realized tangential force never exceeds the cap") {
  Rng rng(17);
  RobotParams robot;
  const SimState s = SimState::standing(robot);
  for (int i = 0; i < 2000; ++i) {
    const double mu = rng.uniform(0.05, 1.0);
    ContactForce cmd;
    cmd.stance = kAll;
    for (auto& f : cmd.force) f = {rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-20, 150)};
    const StepResult r = simulate_step(mu, s, cmd, 0.001, robot);
    for (const Vec3& f : r.realized.force) {
      CHECK(f.z() >= 0.0);
      CHECK(std::hypot(f.x(), f.y()) <= mu * f.z() + 1e-12);
    }
  }
}

TEST_CASE("simulator: overstretched legs carry no load") {
  RobotParams robot;
  SimState s = SimState::standing(robot);
  s.feet[0].x() += 0.5;
  ContactForce cmd;
  cmd.stance = kAll;
  cmd.force = vertical(30.0);
  const StepResult r = simulate_step(0.8, s, cmd, 0.001, robot);
  CHECK(r.realized.force[0].norm() == 0.0);
  CHECK(r.next.lost[0]);
  CHECK(r.realized.force[1].z() == 30.0);
}

TEST_CASE("simulator: energy does not increase without contact forces") {
  Rng rng(23);
  RobotParams robot;
  for (int i = 0; i < 100; ++i) {
    SrbState b;
    b.position = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.0805, 0.5)};
    b.rpy = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-3, 3)};
    b.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, 1)};
    b.omega = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    SimState s = SimState::standing(robot, b);
    ContactForce none;
    double e = s.energy(robot.gravity);
    for (int k = 0; k < 50; ++k) {
      s = simulate_step(rng.uniform(0.05, 1.0), s, none, 0.001, robot).next;
      const double e_next = s.energy(robot.gravity);
      CHECK(e_next <= e + 1e-9 * std::max(1.0, std::abs(e)));
      e = e_next;
    }
    CHECK(s.body.position.z() >= robot.body_contact_height - 1e-12);
  }
}

TEST_CASE("metrics definitions") {
  MpcConfig ref;
  EpisodeTrace trace(100);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    trace[i].time = 0.001 * (i + 1);
    trace[i].position = {0.0, 0.0, 0.32};
    trace[i].velocity = {0.5, 0.0, 0.0};
    trace[i].commanded.stance = {true, false, false, true};
    trace[i].commanded.force[0] = {0, 0, 60};
    trace[i].commanded.force[3] = {0, 0, 58};
    trace[i].realized = trace[i].commanded;
  }
  EpisodeMetrics m = compute_metrics(trace, ref);
  CHECK(m.success);
  CHECK(m.fall_time == -1.0);
  CHECK(m.slippage_ratio == 0.0);
  CHECK(m.tracking_cost == 0.0);
  CHECK(m.effort_cost == doctest::Approx(100 * (60.0 * 60 + 58.0 * 58)));

  trace[40].position.z() = 0.2;
  trace[10].commanded.force[0] = {3, 4, 50};
  m = compute_metrics(trace, ref);
  CHECK_FALSE(m.success);
  CHECK(m.fall_time == doctest::Approx(0.041));
  CHECK(m.slippage_ratio == doctest::Approx(0.1 / 200));
  CHECK_THROWS_AS(compute_metrics(EpisodeTrace{}, ref), std::invalid_argument);
}

TEST_CASE("episodes are bit-reproducible") {
  EpisodeConfig c;
  c.duration = 0.5;
  c.seed = 9;
  const EpisodeResult a = run_episode(c);
  const EpisodeResult b = run_episode(c);
  REQUIRE(a.trace.size() == 500);
  REQUIRE(b.trace.size() == a.trace.size());
  bool same = true;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    same = same && a.trace[i].position == b.trace[i].position && a.trace[i].velocity == b.trace[i].velocity &&
           a.trace[i].realized.force == b.trace[i].realized.force;
  }
  CHECK(same);

  const auto dir = std::filesystem::temp_directory_path() / "rsnet_test_quad";
  std::filesystem::create_directories(dir);
  write_trace_csv(dir / "a.csv", a.trace);
  write_trace_csv(dir / "b.csv", b.trace);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("matched friction on a grippy floor trots at the reference") {
  EpisodeConfig c;
  c.controller_mu = 0.8;
  c.true_mu = 0.8;
  c.duration = 4.0;
  const EpisodeResult r = run_episode(c);
  CHECK(r.metrics.success);
  CHECK(r.metrics.slip_samples == 0);
  CHECK(r.metrics.slippage_ratio <= 0.12);
  CHECK(r.trace.back().velocity.x() == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("ice: fixed mu falls, informed mu stays up") {
  EpisodeConfig c;
  c.true_mu = 0.05;
  c.controller_mu = 0.5;
  c.duration = 3.0;
  const EpisodeResult fixed = run_episode(c);
  CHECK_FALSE(fixed.metrics.success);
  CHECK(fixed.metrics.fall_time > 0.0);
  CHECK(fixed.metrics.fall_time <= 3.0);

  c.controller_mu = 0.05;
  c.duration = 10.0;
  const EpisodeResult informed = run_episode(c);
  CHECK(informed.metrics.success);
  CHECK(informed.metrics.min_height > 0.25);
}
