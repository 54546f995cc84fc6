#include "rsnet/pipeline/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace rsnet::pipeline {

namespace {

using nlohmann::json;

// Object reader that records which keys were consumed, so leftovers can be
// reported as unknown fields.
class Fields {
 public:
  Fields(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = path_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + key;
    throw ConfigError("config: " + (where.empty() ? std::string("<root>") : where) + ": " + what);
  }

  const json* take(const char* key) {
    seen_.insert(key);
    if (!j_) return nullptr;
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  Fields sub(const char* key) {
    const json* v = take(key);
    return Fields(v, path_.empty() ? key : path_ + "." + key);
  }

  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void get_list(const char* key, T& out, std::size_t exact = 0) {
    if (const json* v = take(key)) {
      using E = typename T::value_type;
      if (!v->is_array()) fail(key, "expected an array");
      if (exact && v->size() != exact) fail(key, "expected " + std::to_string(exact) + " entries");
      std::vector<E> tmp;
      for (const auto& e : *v) {
        if constexpr (std::is_same_v<E, std::string>) {
          if (!e.is_string()) fail(key, "expected an array of strings");
        } else if constexpr (std::is_integral_v<E>) {
          if (!e.is_number_integer()) fail(key, "expected an array of integers");
        } else {
          if (!e.is_number()) fail(key, "expected an array of numbers");
        }
        tmp.push_back(e.get<E>());
      }
      if constexpr (requires { out.assign(tmp.begin(), tmp.end()); }) {
        out.assign(tmp.begin(), tmp.end());
      } else {
        std::copy(tmp.begin(), tmp.end(), out.begin());
      }
    }
  }
  void get_vec3(const char* key, quad::Vec3& out) {
    std::array<double, 3> a{out.x(), out.y(), out.z()};
    get_list(key, a, 3);
    out = {a[0], a[1], a[2]};
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items()) {
      if (!seen_.count(k)) fail(k, "unknown field");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void checked(const char* section, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + section + ": " + e.what());
  }
}

json vec3(const quad::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

synth::ResponseMatrix PipelineConfig::response() const {
  return synth::ResponseMatrix::gaussian(grid, response_centers_nm, response_width_nm);
}

std::vector<std::string> PipelineConfig::training_class_names() const {
  std::vector<std::string> out;
  for (const auto& m : classes) {
    if (!m.held_out) out.push_back(m.name);
  }
  return out;
}

CampaignConfig PipelineConfig::campaign_config() const {
  CampaignConfig c = campaign;
  c.episode = quad;
  c.segment = segment;
  c.seed = seed;
  return c;
}

void PipelineConfig::validate() const {
  checked("spectra", [&] {
    grid.validate();
    if (!(response_width_nm > 0.0)) throw std::invalid_argument("response_width_nm must be positive");
  });
  checked("classes", [&] {
    if (training_class_names().size() < 2) throw std::invalid_argument("need at least 2 training classes");
    std::set<std::string> names;
    for (const auto& m : classes) {
      m.validate();
      if (!names.insert(m.name).second) throw std::invalid_argument("duplicate class '" + m.name + "'");
    }
  });
  checked("data", [&] {
    if (data.n_per_class < 1 || data.n_heldout_per_class < 0) throw std::invalid_argument("bad sample counts");
    if (data.patch_size != model.input_size) throw std::invalid_argument("patch_size must equal model.input_size");
    if (!(data.brightness_min > 0.0 && data.brightness_min <= data.brightness_max)) {
      throw std::invalid_argument("need 0 < brightness_min <= brightness_max");
    }
  });
  checked("model", [&] {
    model.validate();
    if (model.spectral_bands != grid.bands) throw std::invalid_argument("spectral_bands must equal spectra.bands");
  });
  checked("train", [&] {
    if (train.pretrain_epochs < 0 || train.finetune_epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (train.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(train.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(train.alpha >= 0.0 && train.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  });
  checked("quad", [&] { quad.validate(); });
  checked("segment", [&] {
    segment.validate();
    if (segment.output_size != model.input_size) throw std::invalid_argument("output_size must equal model.input_size");
  });
  checked("campaign", [&] {
    campaign_config().validate();
    for (const auto& t : campaign.terrains) synth::find_material(classes, t);
  });
  checked("mppi", [&] { mppi.validate(); });
  checked("wheeled", [&] {
    wheeled.scenario.validate();
    synth::find_material(classes, wheeled.scenario.ground_class);
    synth::find_material(classes, wheeled.scenario.patch_class);
    if (wheeled.max_steps < 1 || wheeled.seeds < 1) throw std::invalid_argument("max_steps and seeds must be >= 1");
  });
  checked("bench", [&] {
    if (bench.frames < 0) throw std::invalid_argument("frames must be >= 0");
    if (bench.tile_px < segment.output_size) throw std::invalid_argument("tile_px below the model input size");
    if (bench.layout.empty()) throw std::invalid_argument("layout must not be empty");
    for (const auto& row : bench.layout) {
      if (row.size() != bench.layout[0].size() || row.empty()) throw std::invalid_argument("layout rows must match");
      for (const auto& name : row) synth::find_material(classes, name);
    }
  });
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Fields root(&j, "");
  root.get("seed", c.seed);

  Fields sp = root.sub("spectra");
  sp.get("start_nm", c.grid.start_nm);
  sp.get("end_nm", c.grid.end_nm);
  sp.get("bands", c.grid.bands);
  sp.get_list("response_centers_nm", c.response_centers_nm, 3);
  sp.get("response_width_nm", c.response_width_nm);
  sp.finish();

  if (const json* classes = root.take("classes")) {
    checked("classes", [&] { c.classes = synth::class_table_from_json(json{{"classes", *classes}}); });
  }

  Fields d = root.sub("data");
  d.get("n_per_class", c.data.n_per_class);
  d.get("n_heldout_per_class", c.data.n_heldout_per_class);
  d.get("patch_size", c.data.patch_size);
  Fields split = d.sub("split");
  split.get("train", c.data.split.train);
  split.get("val", c.data.split.val);
  split.get("test", c.data.split.test);
  split.finish();
  d.get("brightness_min", c.data.brightness_min);
  d.get("brightness_max", c.data.brightness_max);
  d.finish();

  Fields m = root.sub("model");
  m.get("input_size", c.model.input_size);
  m.get("stem_channels", c.model.stem_channels);
  m.get("stem_stride", c.model.stem_stride);
  m.get("growth_rate", c.model.growth_rate);
  m.get("block1_layers", c.model.block1_layers);
  m.get("block2_layers", c.model.block2_layers);
  m.get("transition_channels", c.model.transition_channels);
  m.get("reduce1_channels", c.model.reduce1_channels);
  m.get("reduce2_channels", c.model.reduce2_channels);
  m.get("spectral_bands", c.model.spectral_bands);
  m.get_list("head_dims", c.model.head_dims);
  m.get("head_dropout", c.model.head_dropout);
  m.finish();

  Fields t = root.sub("train");
  t.get("pretrain_epochs", c.train.pretrain_epochs);
  t.get("finetune_epochs", c.train.finetune_epochs);
  t.get("batch_size", c.train.batch_size);
  t.get("learning_rate", c.train.learning_rate);
  t.get("alpha", c.train.alpha);
  t.finish();
  c.model.alpha = c.train.alpha;

  Fields q = root.sub("quad");
  auto& e = c.quad;
  q.get("duration", e.duration);
  q.get("sim_dt", e.sim_dt);
  q.get("replan_interval", e.replan_interval);
  q.get("controller_mu", e.controller_mu);
  q.get("true_mu", e.true_mu);
  q.get("initial_attitude_noise", e.initial_attitude_noise);
  q.get("initial_velocity_noise", e.initial_velocity_noise);
  Fields mpc = q.sub("mpc");
  mpc.get("horizon", e.mpc.horizon);
  mpc.get("dt", e.mpc.dt);
  mpc.get("weight_z", e.mpc.weight_z);
  mpc.get("weight_vx", e.mpc.weight_vx);
  mpc.get("weight_vy", e.mpc.weight_vy);
  mpc.get_vec3("weight_omega", e.mpc.weight_omega);
  mpc.get("weight_roll", e.mpc.weight_roll);
  mpc.get("weight_pitch", e.mpc.weight_pitch);
  mpc.get("control_penalty", e.mpc.control_penalty);
  mpc.get("desired_height", e.mpc.desired_height);
  mpc.get("desired_speed", e.mpc.desired_speed);
  mpc.get("reference_accel", e.mpc.reference_accel);
  mpc.finish();
  Fields gait = q.sub("gait");
  gait.get("frequency", e.gait.frequency);
  gait.get("duty", e.gait.duty);
  gait.get("swing_height", e.gait.swing_height);
  gait.get_list("offsets", e.gait.offsets, 4);
  gait.finish();
  Fields robot = q.sub("robot");
  robot.get("gravity", e.robot.gravity);
  robot.get("max_leg_length", e.robot.max_leg_length);
  robot.get("body_contact_height", e.robot.body_contact_height);
  robot.finish();
  Fields slip = q.sub("slip");
  slip.get("slide_gain", e.slip.slide_gain);
  slip.get("max_slide_speed", e.slip.max_slide_speed);
  slip.get("body_damping", e.slip.body_damping);
  slip.finish();
  Fields body = q.sub("body");
  double height = e.body.position.z();
  body.get("height", height);
  e.body.position.z() = height;
  body.get("mass", e.body.mass);
  body.get_vec3("inertia", e.body.inertia);
  body.finish();
  q.finish();

  Fields cp = root.sub("campaign");
  cp.get("episodes", c.campaign.episodes);
  cp.get_list("terrains", c.campaign.terrains);
  cp.get("fixed_mu", c.campaign.fixed_mu);
  cp.get("friction_safety", c.campaign.friction_safety);
  cp.get("scene_px", c.campaign.scene_px);
  cp.finish();

  Fields sg = root.sub("segment");
  sg.get("tau", c.segment.tau);
  sg.get("chroma_tau", c.segment.chroma_tau);
  sg.get("shade_ratio", c.segment.shade_ratio);
  sg.get("blur_radius", c.segment.blur_radius);
  sg.get("min_region_pixels", c.segment.min_region_pixels);
  sg.get("min_patch_size", c.segment.min_patch_size);
  sg.get("output_size", c.segment.output_size);
  sg.finish();

  Fields mp = root.sub("mppi");
  mp.get("samples", c.mppi.samples);
  mp.get("horizon", c.mppi.horizon);
  mp.get("dt", c.mppi.dt);
  mp.get("max_v", c.mppi.max_v);
  mp.get("max_w", c.mppi.max_w);
  mp.get("lambda", c.mppi.lambda);
  mp.get("noise_v", c.mppi.noise_v);
  mp.get("noise_w", c.mppi.noise_w);
  mp.get("goal_radius", c.mppi.goal_radius);
  Fields wt = mp.sub("weights");
  wt.get("terrain", c.mppi.weights.terrain);
  wt.get("goal", c.mppi.weights.goal);
  wt.get("control", c.mppi.weights.control);
  wt.get("out_of_bounds", c.mppi.weights.out_of_bounds);
  wt.get("terminal_goal", c.mppi.weights.terminal_goal);
  wt.finish();
  mp.finish();

  Fields wh = root.sub("wheeled");
  std::string world_file;
  wh.get("world_file", world_file);
  if (!world_file.empty()) {
    try {
      c.wheeled.scenario.world = mppi::read_world(world_file);
    } catch (const std::exception& ex) {
      wh.fail("world_file", ex.what());
    }
  }
  wh.get("ground_class", c.wheeled.scenario.ground_class);
  wh.get("patch_class", c.wheeled.scenario.patch_class);
  wh.get("pixels_per_cell", c.wheeled.scenario.pixels_per_cell);
  wh.get("max_steps", c.wheeled.max_steps);
  wh.get("seeds", c.wheeled.seeds);
  if (const json* costs = wh.take("costs")) {
    if (!costs->is_object()) wh.fail("costs", "expected an object of class -> cost");
    for (const auto& [k, v] : costs->items()) {
      if (!v.is_number() || v.get<double>() < 0.0) wh.fail("costs." + k, "expected a non-negative number");
      c.wheeled.scenario.costs.costs[k] = v.get<double>();
    }
  }
  wh.get("unknown_cost", c.wheeled.scenario.costs.unknown);
  wh.finish();

  Fields bn = root.sub("bench");
  bn.get("frames", c.bench.frames);
  bn.get("tile_px", c.bench.tile_px);
  if (const json* layout = bn.take("layout")) {
    if (!layout->is_array()) bn.fail("layout", "expected an array of rows");
    c.bench.layout.clear();
    for (const auto& row : *layout) {
      if (!row.is_array()) bn.fail("layout", "expected an array of rows");
      std::vector<std::string> names;
      for (const auto& n : row) {
        if (!n.is_string()) bn.fail("layout", "expected class names");
        names.push_back(n.get<std::string>());
      }
      c.bench.layout.push_back(std::move(names));
    }
  }
  bn.finish();
  root.finish();

  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const PipelineConfig& c) {
  const auto& e = c.quad;
  json costs = json::object();
  for (const auto& [k, v] : c.wheeled.scenario.costs.costs) costs[k] = v;
  return {
      {"seed", c.seed},
      {"spectra",
       {{"start_nm", c.grid.start_nm},
        {"end_nm", c.grid.end_nm},
        {"bands", c.grid.bands},
        {"response_centers_nm", c.response_centers_nm},
        {"response_width_nm", c.response_width_nm}}},
      {"classes", synth::class_table_to_json(c.classes)["classes"]},
      {"data",
       {{"n_per_class", c.data.n_per_class},
        {"n_heldout_per_class", c.data.n_heldout_per_class},
        {"patch_size", c.data.patch_size},
        {"split", {{"train", c.data.split.train}, {"val", c.data.split.val}, {"test", c.data.split.test}}},
        {"brightness_min", c.data.brightness_min},
        {"brightness_max", c.data.brightness_max}}},
      {"model",
       {{"input_size", c.model.input_size},
        {"stem_channels", c.model.stem_channels},
        {"stem_stride", c.model.stem_stride},
        {"growth_rate", c.model.growth_rate},
        {"block1_layers", c.model.block1_layers},
        {"block2_layers", c.model.block2_layers},
        {"transition_channels", c.model.transition_channels},
        {"reduce1_channels", c.model.reduce1_channels},
        {"reduce2_channels", c.model.reduce2_channels},
        {"spectral_bands", c.model.spectral_bands},
        {"head_dims", c.model.head_dims},
        {"head_dropout", c.model.head_dropout}}},
      {"train",
       {{"pretrain_epochs", c.train.pretrain_epochs},
        {"finetune_epochs", c.train.finetune_epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"alpha", c.train.alpha}}},
      {"quad",
       {{"duration", e.duration},
        {"sim_dt", e.sim_dt},
        {"replan_interval", e.replan_interval},
        {"controller_mu", e.controller_mu},
        {"true_mu", e.true_mu},
        {"initial_attitude_noise", e.initial_attitude_noise},
        {"initial_velocity_noise", e.initial_velocity_noise},
        {"mpc",
         {{"horizon", e.mpc.horizon},
          {"dt", e.mpc.dt},
          {"weight_z", e.mpc.weight_z},
          {"weight_vx", e.mpc.weight_vx},
          {"weight_vy", e.mpc.weight_vy},
          {"weight_omega", vec3(e.mpc.weight_omega)},
          {"weight_roll", e.mpc.weight_roll},
          {"weight_pitch", e.mpc.weight_pitch},
          {"control_penalty", e.mpc.control_penalty},
          {"desired_height", e.mpc.desired_height},
          {"desired_speed", e.mpc.desired_speed},
          {"reference_accel", e.mpc.reference_accel}}},
        {"gait",
         {{"frequency", e.gait.frequency},
          {"duty", e.gait.duty},
          {"swing_height", e.gait.swing_height},
          {"offsets", e.gait.offsets}}},
        {"robot",
         {{"gravity", e.robot.gravity},
          {"max_leg_length", e.robot.max_leg_length},
          {"body_contact_height", e.robot.body_contact_height}}},
        {"slip",
         {{"slide_gain", e.slip.slide_gain},
          {"max_slide_speed", e.slip.max_slide_speed},
          {"body_damping", e.slip.body_damping}}},
        {"body", {{"height", e.body.position.z()}, {"mass", e.body.mass}, {"inertia", vec3(e.body.inertia)}}}}},
      {"campaign",
       {{"episodes", c.campaign.episodes},
        {"terrains", c.campaign.terrains},
        {"fixed_mu", c.campaign.fixed_mu},
        {"friction_safety", c.campaign.friction_safety},
        {"scene_px", c.campaign.scene_px}}},
      {"segment",
       {{"tau", c.segment.tau},
        {"chroma_tau", c.segment.chroma_tau},
        {"shade_ratio", c.segment.shade_ratio},
        {"blur_radius", c.segment.blur_radius},
        {"min_region_pixels", c.segment.min_region_pixels},
        {"min_patch_size", c.segment.min_patch_size},
        {"output_size", c.segment.output_size}}},
      {"mppi",
       {{"samples", c.mppi.samples},
        {"horizon", c.mppi.horizon},
        {"dt", c.mppi.dt},
        {"max_v", c.mppi.max_v},
        {"max_w", c.mppi.max_w},
        {"lambda", c.mppi.lambda},
        {"noise_v", c.mppi.noise_v},
        {"noise_w", c.mppi.noise_w},
        {"goal_radius", c.mppi.goal_radius},
        {"weights",
         {{"terrain", c.mppi.weights.terrain},
          {"goal", c.mppi.weights.goal},
          {"control", c.mppi.weights.control},
          {"out_of_bounds", c.mppi.weights.out_of_bounds},
          {"terminal_goal", c.mppi.weights.terminal_goal}}}}},
      {"wheeled",
       {{"ground_class", c.wheeled.scenario.ground_class},
        {"patch_class", c.wheeled.scenario.patch_class},
        {"pixels_per_cell", c.wheeled.scenario.pixels_per_cell},
        {"max_steps", c.wheeled.max_steps},
        {"seeds", c.wheeled.seeds},
        {"costs", costs},
        {"unknown_cost", c.wheeled.scenario.costs.unknown}}},
      {"bench", {{"frames", c.bench.frames}, {"tile_px", c.bench.tile_px}, {"layout", c.bench.layout}}},
  };
}

}  // namespace rsnet::pipeline
