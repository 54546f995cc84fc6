#include "rsnet/mppi/mppi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::mppi {

void MppiConfig::validate() const {
  if (samples < 1) throw std::invalid_argument("mppi: samples must be >= 1");
  if (!(horizon > 0.0) || !(dt > 0.0)) throw std::invalid_argument("mppi: horizon and dt must be positive");
  if (steps() < 1) throw std::invalid_argument("mppi: horizon must cover at least one step");
  if (!(max_v > 0.0) || !(max_w > 0.0)) throw std::invalid_argument("mppi: control limits must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("mppi: lambda must be positive");
  if (!(noise_v >= 0.0) || !(noise_w >= 0.0)) throw std::invalid_argument("mppi: noise must be >= 0");
  const auto& w = weights;
  if (!(w.terrain >= 0 && w.goal >= 0 && w.control >= 0 && w.out_of_bounds >= 0 && w.terminal_goal >= 0)) {
    throw std::invalid_argument("mppi: cost weights must be >= 0");
  }
  if (!(goal_radius > 0.0)) throw std::invalid_argument("mppi: goal_radius must be positive");
}

int MppiConfig::steps() const { return static_cast<int>(std::lround(horizon / dt)); }

Control MppiConfig::clamp(Control c) const {
  return {std::clamp(c.v, -max_v, max_v), std::clamp(c.w, -max_w, max_w)};
}

UnicycleState step_unicycle(const UnicycleState& s, const Control& c, double dt) {
  return {s.x + dt * c.v * std::cos(s.heading), s.y + dt * c.v * std::sin(s.heading),
          wrap_angle(s.heading + dt * c.w)};
}

namespace {

double stage_cost(const GridWorld& world, const CostWeights& w, const UnicycleState& s, const Control& c) {
  const int idx = world.cell_index(s.x, s.y);
  double cost = w.control * (c.v * c.v + c.w * c.w) + w.goal * std::hypot(s.x - world.goal_x, s.y - world.goal_y);
  if (idx < 0) {
    cost += w.out_of_bounds;
  } else {
    cost += w.terrain * world.cost[idx];
  }
  return cost;
}

double terminal_cost(const GridWorld& world, const CostWeights& w, const UnicycleState& s) {
  return w.terminal_goal * std::hypot(s.x - world.goal_x, s.y - world.goal_y);
}

template <class Visit>
double integrate(const GridWorld& world, const MppiConfig& config, UnicycleState s, const ControlSeq& controls,
                 Visit&& visit) {
  double cost = 0.0;
  for (const Control& raw : controls) {
    const Control c = config.clamp(raw);
    s = step_unicycle(s, c, config.dt);
    visit(s);
    cost += config.dt * stage_cost(world, config.weights, s, c);
  }
  return cost + terminal_cost(world, config.weights, s);
}

}  // namespace

Rollout rollout(const GridWorld& world, const MppiConfig& config, const UnicycleState& state,
                const ControlSeq& controls) {
  Rollout r;
  r.states.reserve(controls.size() + 1);
  r.states.push_back(state);
  r.cost = integrate(world, config, state, controls, [&](const UnicycleState& s) { r.states.push_back(s); });
  return r;
}

double rollout_cost(const GridWorld& world, const MppiConfig& config, const UnicycleState& state,
                    const ControlSeq& controls) {
  return integrate(world, config, state, controls, [](const UnicycleState&) {});
}

std::vector<double> mppi_weights(const std::vector<double>& costs, double lambda) {
  if (costs.empty()) return {};
  const double lo = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - lo) / lambda);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

ControlSeq sample_controls(const MppiConfig& config, const ControlSeq& nominal, std::uint64_t seed, int sample) {
  ControlSeq u(nominal.size());
  const std::uint64_t key = mix_seed(seed, static_cast<std::uint64_t>(sample));
  for (std::size_t k = 0; k < nominal.size(); ++k) {
    const double ev = config.noise_v * counter_normal(key, 2 * k);
    const double ew = config.noise_w * counter_normal(key, 2 * k + 1);
    u[k] = config.clamp({nominal[k].v + ev, nominal[k].w + ew});
  }
  return u;
}

namespace {

MppiUpdate combine(const MppiConfig& config, const std::vector<ControlSeq>& samples, std::vector<double> costs) {
  MppiUpdate out;
  out.weights = mppi_weights(costs, config.lambda);
  out.costs = std::move(costs);
  const std::size_t steps = samples.front().size();
  out.controls.assign(steps, Control{});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = out.weights[i];
    for (std::size_t k = 0; k < steps; ++k) {
      out.controls[k].v += w * samples[i][k].v;
      out.controls[k].w += w * samples[i][k].w;
    }
  }
  // guard the convex combination against rounding past the limits
  for (auto& c : out.controls) c = config.clamp(c);
  return out;
}

void check_update_args(const MppiConfig& config, const GridWorld& world, const ControlSeq& nominal) {
  config.validate();
  world.validate();
  if (static_cast<int>(nominal.size()) != config.steps()) {
    throw std::invalid_argument("mppi_update: nominal sequence must have config.steps() entries");
  }
}

}  // namespace

namespace serial {

MppiUpdate mppi_update(const MppiConfig& config, const GridWorld& world, const UnicycleState& state,
                       const ControlSeq& nominal, std::uint64_t seed) {
  check_update_args(config, world, nominal);
  std::vector<ControlSeq> samples(config.samples);
  std::vector<double> costs(config.samples);
  for (int i = 0; i < config.samples; ++i) {
    samples[i] = sample_controls(config, nominal, seed, i);
    costs[i] = rollout_cost(world, config, state, samples[i]);
  }
  return combine(config, samples, std::move(costs));
}

}  // namespace serial

namespace parallel {

MppiUpdate mppi_update(const MppiConfig& config, const GridWorld& world, const UnicycleState& state,
                       const ControlSeq& nominal, std::uint64_t seed) {
  check_update_args(config, world, nominal);
  std::vector<ControlSeq> samples(config.samples);
  std::vector<double> costs(config.samples);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < config.samples; ++i) {
    samples[i] = sample_controls(config, nominal, seed, i);
    costs[i] = rollout_cost(world, config, state, samples[i]);
  }
  return combine(config, samples, std::move(costs));
}

}  // namespace parallel

const char* to_string(PlanOutcome o) { return o == PlanOutcome::reached ? "reached" : "timeout"; }

PlanResult plan_to_goal(const GridWorld& world, const MppiConfig& config, int max_steps, std::uint64_t seed) {
  config.validate();
  world.validate();
  if (max_steps < 1) throw std::invalid_argument("plan_to_goal: max_steps must be >= 1");
  PlanResult out;
  UnicycleState s = world.start;
  s.heading = wrap_angle(s.heading);
  out.states.push_back(s);
  if (world.in_patch(s.x, s.y)) ++out.patch_samples;
  ControlSeq nominal(config.steps());
  auto at_goal = [&](const UnicycleState& p) {
    return std::hypot(p.x - world.goal_x, p.y - world.goal_y) <= config.goal_radius;
  };
  for (int step = 0; step < max_steps && !at_goal(s); ++step) {
    const MppiUpdate u = mppi_update(config, world, s, nominal, mix_seed(seed, static_cast<std::uint64_t>(step)));
    const Control c = u.controls.front();
    const UnicycleState next = step_unicycle(s, c, config.dt);
    out.path_length += std::hypot(next.x - s.x, next.y - s.y);
    s = next;
    out.states.push_back(s);
    out.controls.push_back(c);
    if (world.in_patch(s.x, s.y)) ++out.patch_samples;
    // warm start: shift by one step, repeat the last control
    std::copy(u.controls.begin() + 1, u.controls.end(), nominal.begin());
    nominal.back() = u.controls.back();
  }
  out.outcome = at_goal(s) ? PlanOutcome::reached : PlanOutcome::timeout;
  out.time_to_goal = static_cast<double>(out.controls.size()) * config.dt;
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const PlanResult& plan, double dt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,time,x,y,heading,v,w\n";
  for (std::size_t k = 0; k < plan.states.size(); ++k) {
    const auto& s = plan.states[k];
    out << k << ',' << csv::num(k * dt) << ',' << csv::num(s.x) << ',' << csv::num(s.y) << ','
        << csv::num(s.heading) << ',';
    if (k < plan.controls.size()) out << csv::num(plan.controls[k].v) << ',' << csv::num(plan.controls[k].w);
    else out << ',';
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_ppm(const std::filesystem::path& path, const GridWorld& world, const std::vector<PlanResult>& paths,
               int pixels_per_cell) {
  world.validate();
  if (pixels_per_cell < 1) throw std::invalid_argument("write_ppm: pixels_per_cell must be >= 1");
  const int w = world.width * pixels_per_cell, h = world.height * pixels_per_cell;
  std::vector<std::array<unsigned char, 3>> img(static_cast<std::size_t>(w) * h);
  const double hi = std::max(1e-12, *std::max_element(world.cost.begin(), world.cost.end()));
  // image row 0 is the top, i.e. the largest y
  auto put = [&](int px, int py, std::array<unsigned char, 3> c) {
    if (px >= 0 && py >= 0 && px < w && py < h) img[static_cast<std::size_t>(h - 1 - py) * w + px] = c;
  };
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double t = world.cost_at(px / pixels_per_cell, py / pixels_per_cell) / hi;
      const auto lerp = [t](double a, double b) { return static_cast<unsigned char>(std::lround(a + t * (b - a))); };
      put(px, py, {lerp(90, 140), lerp(190, 90), lerp(90, 40)});
    }
  }
  if (world.patch) {
    const auto& r = *world.patch;
    const int x0 = r.x0 * pixels_per_cell, x1 = r.x1 * pixels_per_cell - 1;
    const int y0 = r.y0 * pixels_per_cell, y1 = r.y1 * pixels_per_cell - 1;
    for (int x = x0; x <= x1; ++x) {
      put(x, y0, {60, 30, 10});
      put(x, y1, {60, 30, 10});
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0, y, {60, 30, 10});
      put(x1, y, {60, 30, 10});
    }
  }
  static const std::array<std::array<unsigned char, 3>, 4> colours{{{220, 30, 30}, {30, 60, 220}, {240, 200, 0},
                                                                     {160, 0, 160}}};
  const double scale = pixels_per_cell / world.cell_size;
  auto dot = [&](double x, double y, int radius, std::array<unsigned char, 3> c) {
    const int cx = static_cast<int>(x * scale), cy = static_cast<int>(y * scale);
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) put(cx + dx, cy + dy, c);
    }
  };
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (const auto& s : paths[p].states) dot(s.x, s.y, 0, colours[p % colours.size()]);
  }
  dot(world.start.x, world.start.y, 2, {255, 255, 255});
  dot(world.goal_x, world.goal_y, 2, {0, 0, 0});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << w << ' ' << h << "\n255\n";
  for (const auto& px : img) out.write(reinterpret_cast<const char*>(px.data()), 3);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace rsnet::mppi
