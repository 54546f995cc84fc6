#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "rsnet/synth/dataset.hpp"
#include "rsnet/util/binary_io.hpp"

using namespace rsnet;
using namespace rsnet::synth;

namespace {

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double norm(const std::vector<double>& a) { return l2(a, std::vector<double>(a.size(), 0.0)); }

std::array<double, 3> mean_rgb(const nn::Tensor& patch) {
  std::array<double, 3> m{};
  const int n = patch.dim(1) * patch.dim(2);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < patch.dim(1); ++y)
      for (int x = 0; x < patch.dim(2); ++x) m[c] += patch.at(c, y, x);
    m[c] /= n;
  }
  return m;
}

}  // namespace

TEST_CASE("material table invariants") {
  const WavelengthGrid grid;
  for (const auto& m : default_class_table()) {
    CHECK_NOTHROW(m.validate());
    for (double v : canonical_spectrum(m, grid)) CHECK(v >= 0.0);
  }
  MaterialSpec bad{"x", {{500, 20, -0.1}}, {}, 0.5, false, {}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {"x", {}, {}, 1.2, false, {}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS((WavelengthGrid{500, 400, 64}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((WavelengthGrid{400, 1000, 2}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(find_material(default_class_table(), "lava"), std::out_of_range);
}

TEST_CASE("class table json round trip") {
  const auto table = default_class_table();
  const auto back = class_table_from_json(class_table_to_json(table));
  REQUIRE(back.size() == table.size());
  const WavelengthGrid grid;
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(back[i].name == table[i].name);
    CHECK(back[i].friction == table[i].friction);
    CHECK(back[i].held_out == table[i].held_out);
    CHECK(canonical_spectrum(back[i], grid) == canonical_spectrum(table[i], grid));
  }
  CHECK_THROWS_AS(class_table_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST_CASE("canonical spectrum examples") {
  const WavelengthGrid grid;
  MaterialSpec zero{"z", {{500, 30, 0.0}, {800, 60, 0.0}}, {}, 0.5, false, {}};
  for (double v : canonical_spectrum(zero, grid)) CHECK(v == 0.0);

  for (auto [c, w, a] : {std::tuple{700.0, 40.0, 0.5}, {600.0, 25.0, 1.3}, {820.0, 60.0, 0.2}}) {
    MaterialSpec one{"b", {{c, w, a}}, {}, 0.5, false, {}};
    const auto s = canonical_spectrum(one, grid);
    const double integral = trapezoid(s, grid.spacing());
    const double expect = a * w * std::sqrt(2.0 * M_PI);
    CHECK(std::abs(integral - expect) / expect < 0.02);
  }

  const auto train = default_training_classes();
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t j = i + 1; j < train.size(); ++j)
      CHECK(l2(canonical_spectrum(train[i], grid), canonical_spectrum(train[j], grid)) >= kClassSeparation);
  CHECK(min_class_separation(train, grid) >= kClassSeparation);
}

TEST_CASE("render_rgb examples") {
  const WavelengthGrid grid;
  const auto r = ResponseMatrix::gaussian(grid);
  const std::vector<double> zero(grid.bands, 0.0);
  CHECK(render_rgb(zero, r) == Rgb{0, 0, 0});

  const auto s = canonical_spectrum(find_material(default_class_table(), "brick"), grid);
  std::vector<double> s2 = s;
  for (double& v : s2) v *= 2.0;
  const Rgb a = r.response(s), b = r.response(s2);
  for (int c = 0; c < 3; ++c) CHECK(b[c] == doctest::Approx(2.0 * a[c]).epsilon(1e-14));

  const std::vector<double> flat(grid.bands, 0.4);
  const Rgb g = render_rgb(flat, r);
  const double lo = std::min({g[0], g[1], g[2]}), hi = std::max({g[0], g[1], g[2]});
  CHECK(hi <= 1.1 * lo);
  CHECK(g[1] == doctest::Approx(0.4).epsilon(1e-12));

  CHECK_THROWS_AS(render_rgb(std::vector<double>(10, 0.1), r), std::invalid_argument);
  Eigen::Matrix<double, 3, Eigen::Dynamic> neg = r.matrix();
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(ResponseMatrix{neg}, std::invalid_argument);
}

TEST_CASE("gen_patch examples") {
  const WavelengthGrid grid;
  const auto r = ResponseMatrix::gaussian(grid);
  MaterialSpec flat = find_material(default_class_table(), "grass");
  flat.texture.amplitude = 0.0;
  const auto p = gen_patch(flat, grid, r, 16, 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) CHECK(p.rgb_patch.at(c, y, x) == p.rgb_patch.at(c, 0, 0));
  const auto canon_flat = canonical_spectrum(flat, grid);
  for (int k = 0; k < grid.bands; ++k) CHECK(p.spectrum[k] == doctest::Approx(canon_flat[k]).epsilon(1e-12));

  const MaterialSpec sand = find_material(default_class_table(), "sand");
  const auto a = gen_patch(sand, grid, r, 32, 99), b = gen_patch(sand, grid, r, 32, 99);
  CHECK(a.rgb_patch == b.rgb_patch);
  CHECK(a.spectrum == b.spectrum);
  CHECK(a.friction == sand.friction);
  CHECK(a.class_name == "sand");
  CHECK(!(gen_patch(sand, grid, r, 32, 100).rgb_patch == a.rgb_patch));
  CHECK_THROWS_AS(gen_patch(sand, grid, r, 7, 1), std::invalid_argument);

  // mean of patch means stays within 3 standard errors of the canonical spectrum
  for (const auto& m : default_training_classes()) {
    const auto canon = canonical_spectrum(m, grid);
    std::vector<double> sum(grid.bands, 0.0), sq(grid.bands, 0.0);
    const int n = 100;
    for (int seed = 0; seed < n; ++seed) {
      const auto s = gen_patch(m, grid, r, 32, 1000 + seed).spectrum;
      for (int k = 0; k < grid.bands; ++k) {
        sum[k] += s[k];
        sq[k] += s[k] * s[k];
      }
    }
    for (int k = 0; k < grid.bands; ++k) {
      const double mean = sum[k] / n;
      const double sd = std::sqrt(std::max(0.0, sq[k] / n - mean * mean));
      CHECK(std::abs(mean - canon[k]) <= 3.0 * sd / std::sqrt(n) + 1e-12);
    }
  }
}

TEST_CASE("texture field statistics") {
  for (double corr : {0.8, 4.0}) {
    const auto f = texture_field(64, {corr, 0.1}, 5);
    double mean = 0.0, var = 0.0;
    for (double v : f) mean += v;
    mean /= f.size();
    for (double v : f) var += (v - mean) * (v - mean);
    var /= f.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.35));
    for (double v : f) CHECK(v >= 0.0);
  }
}

TEST_CASE("metamer pairs") {
  const WavelengthGrid grid;
  const auto r = ResponseMatrix::gaussian(grid);
  for (const auto& base : default_class_table()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto pair = make_metamer_pair(base, r, grid, seed);
      std::vector<double> diff(grid.bands);
      for (int k = 0; k < grid.bands; ++k) diff[k] = pair.first[k] - pair.second[k];
      const Rgb rd = r.response(diff);
      CHECK(std::sqrt(rd[0] * rd[0] + rd[1] * rd[1] + rd[2] * rd[2]) < 1e-9);
      CHECK(norm(diff) >= 0.1 * norm(pair.first));
      for (double v : pair.second) CHECK(v >= 0.0);
      CHECK(pair.first_texture.correlation_length_px != pair.second_texture.correlation_length_px);

      MaterialSpec m1 = base, m2 = base;
      m1.spectrum_override = pair.first;
      m1.texture = pair.first_texture;
      m2.spectrum_override = pair.second;
      m2.texture = pair.second_texture;
      const auto p1 = gen_patch(m1, grid, r, 32, seed), p2 = gen_patch(m2, grid, r, 32, seed + 7);
      const auto c1 = mean_rgb(p1.rgb_patch), c2 = mean_rgb(p2.rgb_patch);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(c1[c] - c2[c]) < 0.02);
    }
  }
  CHECK_THROWS_AS(make_metamer_pair(default_class_table()[0], ResponseMatrix::gaussian({400, 1000, 3}),
                                    WavelengthGrid{400, 1000, 3}, 1),
                  std::invalid_argument);
}

TEST_CASE("dataset splits") {
  const WavelengthGrid grid;
  const auto r = ResponseMatrix::gaussian(grid);
  DatasetConfig cfg;
  cfg.n_per_class = 100;
  cfg.n_heldout_per_class = 4;
  cfg.patch_size = 8;
  const auto data = gen_dataset(default_class_table(), grid, r, cfg, 11);
  CHECK(data.class_names.size() == 6);
  for (int label = 0; label < 6; ++label) {
    auto count = [&](const std::vector<TrainingSample>& v) {
      return std::count_if(v.begin(), v.end(), [&](const auto& s) { return s.class_label == label; });
    };
    CHECK(count(data.train) == 80);
    CHECK(count(data.val) == 10);
    CHECK(count(data.test) == 10);
  }
  std::set<std::string> ids;
  std::size_t total = 0;
  for (const auto* split : {&data.train, &data.val, &data.test, &data.heldout}) {
    for (const auto& s : *split) {
      ids.insert(s.id);
      ++total;
    }
  }
  CHECK(ids.size() == total);
  CHECK(data.heldout.size() == 20);
  for (const auto& s : data.heldout) {
    CHECK(s.class_label == -1);
    CHECK(find_material(default_class_table(), s.class_name).held_out);
  }
  for (const auto& s : data.train) CHECK(!find_material(default_class_table(), s.class_name).held_out);

  const auto again = gen_dataset(default_class_table(), grid, r, cfg, 11);
  CHECK(again.train.back().rgb_patch == data.train.back().rgb_patch);
  CHECK(again.heldout.front().spectrum == data.heldout.front().spectrum);

  cfg.n_per_class = 0;
  CHECK_THROWS_AS(gen_dataset(default_class_table(), grid, r, cfg, 1), std::invalid_argument);
}

TEST_CASE("dataset disk round trip") {
  const WavelengthGrid grid;
  const auto r = ResponseMatrix::gaussian(grid);
  DatasetConfig cfg;
  cfg.n_per_class = 5;
  cfg.n_heldout_per_class = 1;
  cfg.patch_size = 8;
  const auto data = gen_dataset(default_class_table(), grid, r, cfg, 4);
  const auto dir = std::filesystem::temp_directory_path() / "rsnet_test_dataset";
  std::filesystem::remove_all(dir);
  write_dataset(data, dir);
  const auto back = read_dataset(dir);
  CHECK(back.class_names == data.class_names);
  REQUIRE(back.train.size() == data.train.size());
  REQUIRE(back.heldout.size() == data.heldout.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    CHECK(back.train[i].id == data.train[i].id);
    CHECK(back.train[i].rgb_patch == data.train[i].rgb_patch);
    CHECK(back.train[i].spectrum == data.train[i].spectrum);
    CHECK(back.train[i].friction == data.train[i].friction);
    CHECK(back.train[i].class_label == data.train[i].class_label);
  }
  {
    std::ofstream os(dir / "patches" / "broken.bin", std::ios::binary);
    os.write("RSNP\x03", 5);
  }
  CHECK_THROWS_AS(read_patch(dir / "patches" / "broken.bin"), io::FormatError);
  std::filesystem::remove_all(dir);
}
