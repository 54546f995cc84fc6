#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "rsnet/pipeline/bench.hpp"
#include "rsnet/pipeline/campaign.hpp"
#include "rsnet/pipeline/config.hpp"
#include "rsnet/pipeline/inference.hpp"
#include "rsnet/pipeline/scene.hpp"
#include "rsnet/pipeline/wheeled.hpp"
#include "rsnet/pipeline/workflow.hpp"
#include "rsnet/util/binary_io.hpp"

using namespace rsnet;
using namespace rsnet::pipeline;

namespace {

const synth::WavelengthGrid kGrid;
const synth::ResponseMatrix kR = synth::ResponseMatrix::gaussian(kGrid);
const std::vector<synth::MaterialSpec> kTable = synth::default_class_table();

// Untrained but well-formed; enough for plumbing and determinism checks.
model::RsNetModel friction_model() {
  const auto cfg = model::RsNetConfig::desk();
  return {model::RsNet(cfg, 21), model::TaskHead(model::HeadConfig::friction(cfg), cfg.spectral_bands, 22)};
}

model::RsNetModel classifier_model() {
  const auto cfg = model::RsNetConfig::desk();
  return {model::RsNet(cfg, 23), model::TaskHead(model::HeadConfig::classifier(cfg, 6), cfg.spectral_bands, 24)};
}

nn::Tensor constant_image(int w, int h, double r, double g, double b) {
  nn::Tensor t({3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      t.at(0, y, x) = r;
      t.at(1, y, x) = g;
      t.at(2, y, x) = b;
    }
  }
  return t;
}

}  // namespace

TEST_CASE("two distinct tiles give exactly two regions") {
  const auto scene = render_tiles({{"ice", "brick"}}, 48, kTable, kGrid, kR, 1, false);
  const auto seg = segment_patches(scene.rgb);
  REQUIRE(seg.regions.size() == 2);
  CHECK(seg.patches.size() == 2);
  CHECK(seg.regions[0].pixels + seg.regions[1].pixels == 96 * 48);
  CHECK(seg.regions[0].square.size == 48);
}

TEST_CASE("uniform image is one region covering every pixel") {
  const auto seg = segment_patches(constant_image(40, 36, 0.3, 0.5, 0.2));
  REQUIRE(seg.regions.size() == 1);
  CHECK(seg.regions[0].pixels == 40 * 36);
  CHECK(seg.regions[0].square.size == 36);
  CHECK(std::all_of(seg.labels.begin(), seg.labels.end(), [](int l) { return l == 0; }));
  CHECK(seg.regions[0].mean_rgb[1] == doctest::Approx(0.5));
}

TEST_CASE("noise-free scenes: regions match the generator map") {
  const std::vector<std::vector<std::vector<std::string>>> layouts{
      {{"asphalt", "brick", "grass"}, {"ice", "sand", "tile"}},
      {{"tile", "ice"}, {"brick", "sand"}},
      {{"brick", "grass", "brick"}},
  };
  for (const auto& layout : layouts) {
    const auto scene = render_tiles(layout, 48, kTable, kGrid, kR, 4, false);
    const auto seg = segment_patches(scene.rgb);
    const auto iou = best_region_iou(scene.region_map, static_cast<int>(scene.materials.size()), seg);
    for (double v : iou) CHECK(v >= 0.95);
  }
}

TEST_CASE("textured tiles still segment into their regions") {
  const auto scene = render_tiles({{"ice", "brick"}, {"sand", "tile"}}, 48, kTable, kGrid, kR, 9);
  const auto seg = segment_patches(scene.rgb);
  const auto iou = best_region_iou(scene.region_map, 4, seg);
  for (double v : iou) CHECK(v >= 0.9);
}

TEST_CASE("regions too thin for a patch are skipped and reported") {
  // a 5 px stripe of ice across a brick field: with no blur nothing merges it
  std::vector<int> map(64 * 48, 0);
  for (int y = 20; y < 25; ++y) {
    for (int x = 0; x < 64; ++x) map[y * 64 + x] = 1;
  }
  const auto scene = render_scene(64, 48, map, {synth::find_material(kTable, "brick"), synth::find_material(kTable, "ice")},
                                  kGrid, kR, 0, false);
  SegmentOptions o;
  o.blur_radius = 0;
  o.min_region_pixels = 16;
  const auto seg = segment_patches(scene.rgb, o);
  REQUIRE(seg.regions.size() == 3);
  REQUIRE(seg.skipped.size() == 1);
  const Region& stripe = seg.regions[seg.skipped[0]];
  CHECK(stripe.patch == -1);
  CHECK(stripe.pixels == 5 * 64);
  CHECK(stripe.square.size == 5);
  CHECK(seg.patches.size() == 2);
}

TEST_CASE("image smaller than the model input is rejected") {
  CHECK_THROWS_AS(segment_patches(constant_image(31, 40, 0.1, 0.1, 0.1)), std::invalid_argument);
  SegmentOptions bad;
  bad.tau = -1.0;
  CHECK_THROWS_AS(segment_patches(constant_image(40, 40, 0.1, 0.1, 0.1), bad), std::invalid_argument);
}

TEST_CASE("largest inscribed square") {
  // 6 x 5 mask with a 3 x 3 block in the lower right and a 2 x 2 elsewhere
  const std::vector<char> mask{
      1, 1, 0, 0, 0, 0,  //
      1, 1, 0, 0, 0, 0,  //
      0, 0, 0, 1, 1, 1,  //
      0, 0, 0, 1, 1, 1,  //
      0, 0, 0, 1, 1, 1,  //
  };
  const auto sq = largest_inscribed_square(mask, 6, 5);
  CHECK(sq.x == 3);
  CHECK(sq.y == 2);
  CHECK(sq.size == 3);
  CHECK(largest_inscribed_square(std::vector<char>(12, 0), 4, 3).size == 0);
}

TEST_CASE("crop_resize: identity at equal size, constant stays constant") {
  nn::Tensor img({3, 40, 40});
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : img.data()) v = u(gen);
  const auto same = crop_resize(img, {4, 6, 32}, 32);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) CHECK(same.at(c, y, x) == img.at(c, y + 6, x + 4));
    }
  }
  const auto up = crop_resize(constant_image(20, 20, 0.25, 0.5, 0.75), {2, 2, 16}, 32);
  for (int y = 0; y < 32; ++y) CHECK(up.at(2, y, 31 - y) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("min_friction examples") {
  CHECK(min_friction(std::vector<double>{0.8, 0.3, 0.6}) == 0.3);
  CHECK(min_friction(std::vector<double>{0.42}) == 0.42);
  CHECK(min_friction(std::vector<double>{0.01, 0.9}) == synth::kMinFriction);
  CHECK_THROWS_AS(min_friction(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(min_friction(std::vector<nn::Tensor>{}, friction_model()), std::invalid_argument);
}

TEST_CASE("min_friction over patches: single patch and permutation invariance") {
  const auto m = friction_model();
  const auto scene = render_tiles({{"asphalt", "ice", "sand"}}, 40, kTable, kGrid, kR, 2);
  auto patches = segment_patches(scene.rgb).patches;
  REQUIRE(patches.size() == 3);
  CHECK(min_friction({patches[1]}, m) == m.predict(patches[1]).friction);
  const double ref = min_friction(patches, m);
  auto less = [](const nn::Tensor& a, const nn::Tensor& b) {
    return std::lexicographical_compare(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
  };
  std::sort(patches.begin(), patches.end(), less);
  do {
    CHECK(min_friction(patches, m) == ref);
  } while (std::next_permutation(patches.begin(), patches.end(), less));
  CHECK_THROWS_AS(min_friction(patches, classifier_model()), std::invalid_argument);
}

TEST_CASE("controller friction applies the safety factor inside the MPC range") {
  CHECK(controller_friction(0.5, 0.8) == doctest::Approx(0.4));
  CHECK(controller_friction(0.06, 0.8) == 0.05);
  CHECK(controller_friction(1.0, 1.0) == 1.0);
  CHECK_THROWS(controller_friction(0.5, 0.0));
  CHECK_THROWS(controller_friction(0.5, 1.5));
}

TEST_CASE("one-episode campaign is reproducible bit-exactly") {
  CampaignConfig c;
  c.episodes = 1;
  c.seed = 17;
  c.episode.duration = 1.0;
  const auto m = friction_model();
  const auto a = monte_carlo_quad(c, m, kTable, kGrid, kR);
  const auto b = monte_carlo_quad(c, m, kTable, kGrid, kR);
  REQUIRE(a.rows.size() == 2);
  CHECK(a.rows[0].variant == kFixedVariant);
  CHECK(a.rows[1].variant == kInformedVariant);
  CHECK(a.rows[0].seed == a.rows[1].seed);
  CHECK(a.rows[0].controller_mu == 0.5);
  CHECK(a.rows[1].controller_mu == controller_friction(a.rows[1].estimated_mu, c.friction_safety));

  const auto dir = std::filesystem::temp_directory_path() / "rsnet_campaign_test";
  std::filesystem::create_directories(dir);
  write_campaign_csv(dir / "a.csv", a.rows);
  write_campaign_csv(dir / "b.csv", b.rows);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(a.summary == b.summary);
}

TEST_CASE("campaign aggregates equal recomputation from the CSV rows") {
  std::vector<CampaignRow> rows;
  const char* variants[] = {kFixedVariant, kInformedVariant};
  std::mt19937 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int e = 0; e < 25; ++e) {
    for (const char* v : variants) {
      CampaignRow r;
      r.episode = e;
      r.variant = v;
      r.terrain = kTable[e % 6].name;
      r.true_mu = kTable[e % 6].friction;
      r.estimated_mu = u(gen);
      r.controller_mu = u(gen);
      r.seed = gen();
      r.metrics.success = u(gen) > 0.3;
      r.metrics.min_height = u(gen);
      r.metrics.fall_time = r.metrics.success ? -1.0 : u(gen) * 10;
      r.metrics.slippage_ratio = u(gen);
      r.metrics.tracking_cost = u(gen) / 7.0;
      r.metrics.effort_cost = 1e8 * u(gen);
      r.metrics.slip_samples = static_cast<int>(gen() % 100);
      r.metrics.mpc_failures = static_cast<int>(gen() % 3);
      rows.push_back(r);
    }
  }
  const auto dir = std::filesystem::temp_directory_path() / "rsnet_campaign_test";
  std::filesystem::create_directories(dir);
  write_campaign_csv(dir / "rows.csv", rows);
  const auto back = read_campaign_csv(dir / "rows.csv");
  REQUIRE(back.size() == rows.size());
  CHECK(back[7].seed == rows[7].seed);
  CHECK(back[7].metrics.effort_cost == rows[7].metrics.effort_cost);
  const auto s = summarize(rows);
  CHECK(summarize(back) == s);
  REQUIRE(s.size() == 2);
  CHECK(s[1].tracking_normalized == 1.0);
  CHECK(s[0].episodes == 25);

  {
    std::ofstream bad(dir / "bad.csv");
    bad << "episode,variant\n1,fixed\n";
  }
  CHECK_THROWS_AS(read_campaign_csv(dir / "bad.csv"), io::FormatError);
}

TEST_CASE("summary statistics on a hand example") {
  std::vector<CampaignRow> rows(4);
  const double slip[] = {0.1, 0.3, 0.2, 0.2};
  const double track[] = {2.0, 4.0, 1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    rows[i].variant = i < 2 ? kFixedVariant : kInformedVariant;
    rows[i].metrics.success = i != 0;
    rows[i].metrics.slippage_ratio = slip[i];
    rows[i].metrics.tracking_cost = track[i];
    rows[i].metrics.effort_cost = track[i] * 10;
  }
  const auto s = summarize(rows);
  REQUIRE(s.size() == 2);
  CHECK(s[0].success_rate == 50.0);
  CHECK(s[1].success_rate == 100.0);
  CHECK(s[0].slippage_mean == doctest::Approx(0.2));
  CHECK(s[0].slippage_std == doctest::Approx(0.1));
  CHECK(s[1].slippage_std == 0.0);
  CHECK(s[0].tracking_normalized == doctest::Approx(3.0));
  CHECK(s[0].effort_normalized == doctest::Approx(3.0));
}

TEST_CASE("wheeled comparison requires a classifier") {
  const auto s = WheeledScenario::desk();
  mppi::MppiConfig c;
  CHECK_THROWS_AS(run_wheeled_comparison(s, friction_model(), {"a"}, kTable, kGrid, kR, c, 5, 0), std::invalid_argument);
  const auto frame = render_overhead(s, kTable, kGrid, kR, 3);
  CHECK(frame.width == 192);
  CHECK(frame.height == 128);
  const auto layer = terrain_layer(s, frame, classifier_model(), {"asphalt", "brick", "grass", "ice", "sand", "tile"}, {});
  CHECK(layer.cost.size() == 48u * 32u);
  CHECK(layer.predictions.size() == 2);
}

TEST_CASE("benchmark on zero frames is an all-zero report") {
  const auto m = classifier_model();
  std::vector<std::vector<model::TaskOutput>> preds{{}};
  const auto b = benchmark_inference({}, {&m}, {}, &preds);
  CHECK(b.frames == 0);
  CHECK(b.patches == 0);
  CHECK(b.frames_per_second == 0.0);
  CHECK(b.seconds_per_patch == 0.0);
  CHECK(preds.empty());
  const auto one = benchmark_inference({render_tiles({{"ice", "tile"}}, 40, kTable, kGrid, kR, 0).rgb}, {&m}, {}, &preds);
  CHECK(one.frames == 1);
  CHECK(one.patches == 2);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].size() == 2);
}

TEST_CASE("config: defaults, round trip, field-level errors") {
  const PipelineConfig d = config_from_json(nlohmann::json::object());
  CHECK(d.campaign.episodes == 200);
  CHECK(d.mppi.samples == 1024);
  CHECK(d.segment.tau == 0.05);
  CHECK(config_to_json(config_from_json(config_to_json(d))) == config_to_json(d));

  nlohmann::json j = config_to_json(d);
  j["seed"] = 9;
  j["mppi"]["lambda"] = 0.25;
  j["wheeled"]["costs"]["grass"] = 7.0;
  const auto c = config_from_json(j);
  CHECK(c.seed == 9);
  CHECK(c.mppi.lambda == 0.25);
  CHECK(c.wheeled.scenario.costs.costs.at("grass") == 7.0);
  CHECK(config_to_json(c) == j);

  auto message = [](const nlohmann::json& bad) -> std::string {
    try {
      config_from_json(bad);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message({{"quad", {{"mpc", {{"horizon", 2.5}}}}}}) == "config: quad.mpc.horizon: expected an integer");
  CHECK(message({{"mppi", {{"samplez", 3}}}}) == "config: mppi.samplez: unknown field");
  CHECK(message({{"segment", 3}}) == "config: segment: expected an object");
  CHECK(message({{"seed", -1}}) == "config: seed: expected a non-negative integer");
  CHECK(message({{"campaign", {{"terrains", {"asphalt", "lava"}}}}}).rfind("config: campaign:", 0) == 0);
  CHECK(message({{"mppi", {{"samples", 0}}}}).rfind("config: mppi:", 0) == 0);
  CHECK(message({{"quad", {{"gait", {{"offsets", {0.0, 0.5}}}}}}}) ==
        "config: quad.gait.offsets: expected 4 entries");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
