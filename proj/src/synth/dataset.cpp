#include "rsnet/synth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "rsnet/util/binary_io.hpp"
#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::synth {

namespace {

std::vector<double> gaussian_kernel(double sigma, int& radius) {
  radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

}  // namespace

std::vector<double> texture_field(int size, const TextureParams& texture, std::uint64_t seed) {
  std::vector<double> m(static_cast<std::size_t>(size) * size, 1.0);
  if (texture.amplitude == 0.0) return m;
  int r = 0;
  const auto k = gaussian_kernel(texture.correlation_length_px, r);
  const int n = size + 2 * r;
  Rng rng(seed);
  std::vector<double> noise(static_cast<std::size_t>(n) * n);
  for (double& v : noise) v = rng.normal();
  // separable filter, keeping only the fully supported centre region
  std::vector<double> rows(static_cast<std::size_t>(n) * size, 0.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int d = 0; d <= 2 * r; ++d) acc += k[d] * noise[static_cast<std::size_t>(y) * n + x + d];
      rows[static_cast<std::size_t>(y) * size + x] = acc;
    }
  }
  std::vector<double> field(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int d = 0; d <= 2 * r; ++d) acc += k[d] * rows[static_cast<std::size_t>(y + d) * size + x];
      field[static_cast<std::size_t>(y) * size + x] = acc;
    }
  }
  // standardize over the patch so the texture never shifts the patch mean
  double mean = 0.0, var = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(field.size()));
  for (std::size_t i = 0; i < field.size(); ++i) {
    m[i] = std::max(0.0, 1.0 + texture.amplitude * (field[i] - mean) / sd);
  }
  return m;
}

TrainingSample gen_patch(const MaterialSpec& spec, const WavelengthGrid& grid, const ResponseMatrix& r, int size,
                         std::uint64_t seed, double brightness) {
  if (size < 8) throw std::invalid_argument("gen_patch: patch size must be >= 8");
  if (r.bands() != grid.bands) throw std::invalid_argument("gen_patch: response matrix does not match grid");
  const SpectralSignature base = canonical_spectrum(spec, grid);
  const auto field = texture_field(size, spec.texture, seed);
  TrainingSample s;
  s.class_name = spec.name;
  s.friction = spec.friction;
  s.rgb_patch = nn::Tensor({3, size, size});
  s.spectrum.assign(grid.bands, 0.0);
  SpectralSignature pixel(grid.bands);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double f = field[static_cast<std::size_t>(y) * size + x] * brightness;
      for (int b = 0; b < grid.bands; ++b) {
        pixel[b] = base[b] * f;
        s.spectrum[b] += pixel[b];
      }
      const Rgb rgb = render_rgb(pixel, r);
      for (int c = 0; c < 3; ++c) s.rgb_patch.at(c, y, x) = rgb[c];
    }
  }
  const double inv = 1.0 / (static_cast<double>(size) * size);
  for (double& v : s.spectrum) v *= inv;
  return s;
}

MetamerPair make_metamer_pair(const MaterialSpec& base, const ResponseMatrix& r, const WavelengthGrid& grid,
                              std::uint64_t seed) {
  if (grid.bands <= 3) throw std::invalid_argument("make_metamer_pair: need more than 3 bands for a null space");
  const SpectralSignature s1 = canonical_spectrum(base, grid);
  const Eigen::Map<const Eigen::VectorXd> s1v(s1.data(), grid.bands);
  const Eigen::MatrixXd R = r.matrix();
  // projector onto null(R): I - R^T (R R^T)^-1 R
  const Eigen::Matrix3d gram = R * R.transpose();
  const Eigen::MatrixXd null_proj =
      Eigen::MatrixXd::Identity(grid.bands, grid.bands) - R.transpose() * gram.ldlt().solve(R);
  const double s1_norm = s1v.norm();

  for (int attempt = 1; attempt <= 100; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    // smooth random perturbation: a few signed broad bumps
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(grid.bands);
    const int n_bumps = 3 + static_cast<int>(rng.index(3));
    for (int j = 0; j < n_bumps; ++j) {
      const double c = rng.uniform(grid.start_nm, grid.end_nm);
      const double w = rng.uniform(30.0, 120.0);
      const double a = rng.uniform(-1.0, 1.0);
      for (int b = 0; b < grid.bands; ++b) {
        const double z = (grid.wavelength(b) - c) / w;
        raw[b] += a * std::exp(-0.5 * z * z);
      }
    }
    Eigen::VectorXd d = null_proj * raw;
    if (d.norm() < 1e-12) continue;
    d *= 0.35 * s1_norm / d.norm();
    // shrink towards the non-negativity boundary if needed
    double step = 1.0;
    for (int b = 0; b < grid.bands; ++b) {
      if (d[b] < 0.0) step = std::min(step, 0.9 * s1v[b] / -d[b]);
    }
    Eigen::VectorXd s2 = (s1v + step * d).cwiseMax(0.0);
    const Eigen::VectorXd diff = s1v - s2;
    if ((R * diff).norm() >= 1e-9) continue;
    if (diff.norm() < 0.1 * s1_norm) continue;
    MetamerPair pair;
    pair.first = s1;
    pair.second.assign(s2.data(), s2.data() + s2.size());
    pair.first_texture = base.texture;
    pair.second_texture = base.texture;
    // visually identical colour, distinct grain
    pair.second_texture.correlation_length_px = base.texture.correlation_length_px >= 2.5
                                                    ? base.texture.correlation_length_px / 4.0
                                                    : base.texture.correlation_length_px * 4.0;
    pair.attempts = attempt;
    return pair;
  }
  throw std::runtime_error("make_metamer_pair: no valid metamer for " + base.name + " after 100 attempts");
}

Dataset gen_dataset(const std::vector<MaterialSpec>& table, const WavelengthGrid& grid, const ResponseMatrix& r,
                    const DatasetConfig& config, std::uint64_t seed) {
  if (config.n_per_class < 1) throw std::invalid_argument("gen_dataset: n_per_class must be >= 1");
  const auto& sp = config.split;
  if (sp.train < 0 || sp.val < 0 || sp.test < 0 || std::abs(sp.train + sp.val + sp.test - 1.0) > 1e-9) {
    throw std::invalid_argument("gen_dataset: split ratios must be non-negative and sum to 1");
  }
  Dataset data;
  const int n = config.n_per_class;
  const int n_train = static_cast<int>(std::lround(n * sp.train));
  const int n_val = std::min(n - n_train, static_cast<int>(std::lround(n * sp.val)));
  int label = 0;
  for (std::size_t ci = 0; ci < table.size(); ++ci) {
    const MaterialSpec& m = table[ci];
    m.validate();
    const int count = m.held_out ? config.n_heldout_per_class : n;
    const int class_label = m.held_out ? -1 : label++;
    if (!m.held_out) data.class_names.push_back(m.name);
    for (int i = 0; i < count; ++i) {
      const std::uint64_t sample_seed = mix_seed(mix_seed(seed, ci + 1), static_cast<std::uint64_t>(i));
      Rng rng(sample_seed);
      const double brightness = rng.uniform(config.brightness_min, config.brightness_max);
      TrainingSample s = gen_patch(m, grid, r, config.patch_size, rng.next_u64(), brightness);
      s.id = m.name + "-" + std::to_string(i);
      s.class_label = class_label;
      if (m.held_out) {
        data.heldout.push_back(std::move(s));
      } else if (i < n_train) {
        data.train.push_back(std::move(s));
      } else if (i < n_train + n_val) {
        data.val.push_back(std::move(s));
      } else {
        data.test.push_back(std::move(s));
      }
    }
  }
  return data;
}

void write_patch(const nn::Tensor& patch, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  io::write_magic(os, "RSNP");
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(patch.rank()));
  for (int d : patch.shape()) io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(patch.data().data()), static_cast<std::streamsize>(patch.size() * 8));
}

nn::Tensor read_patch(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  io::expect_magic(is, "RSNP");
  const auto rank = io::read_pod<std::uint32_t>(is, "patch rank");
  if (rank == 0 || rank > 8) throw io::FormatError("patch: implausible rank");
  nn::Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(io::read_pod<std::uint32_t>(is, "dim")));
  nn::Tensor t(shape);
  if (!is.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * 8))) {
    throw io::FormatError("patch: truncated data in " + path.string());
  }
  return t;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "patches");
  std::ofstream manifest(dir / "manifest.csv");
  std::ofstream spectra(dir / "spectra.csv");
  if (!manifest || !spectra) throw std::runtime_error("cannot write dataset into " + dir.string());
  manifest << "sample_id,split,class,label,mu,patch_path\n";
  bool header_done = false;
  auto emit = [&](const std::vector<TrainingSample>& samples, const char* split) {
    for (const auto& s : samples) {
      if (!header_done) {
        std::vector<std::string> cols;
        for (std::size_t b = 0; b < s.spectrum.size(); ++b) cols.push_back("band_" + std::to_string(b));
        spectra << csv::join(cols) << "\n";
        header_done = true;
      }
      const std::string rel = "patches/" + s.id + ".bin";
      manifest << csv::join({s.id, split, s.class_name, std::to_string(s.class_label), csv::num(s.friction), rel})
               << "\n";
      std::vector<std::string> vals;
      for (double v : s.spectrum) vals.push_back(csv::num(v));
      spectra << csv::join(vals) << "\n";
      write_patch(s.rgb_patch, dir / rel);
    }
  };
  emit(data.train, "train");
  emit(data.val, "val");
  emit(data.test, "test");
  emit(data.heldout, "heldout");
  std::ofstream classes(dir / "classes.txt");
  for (const auto& c : data.class_names) classes << c << "\n";
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.csv");
  std::ifstream spectra(dir / "spectra.csv");
  std::ifstream classes(dir / "classes.txt");
  if (!manifest || !spectra || !classes) throw std::runtime_error("dataset: missing files in " + dir.string());
  Dataset data;
  std::string line;
  while (std::getline(classes, line)) {
    if (!line.empty()) data.class_names.push_back(line);
  }
  std::getline(manifest, line);
  std::getline(spectra, line);
  std::string sline;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 6) throw io::FormatError("manifest: expected 6 columns in '" + line + "'");
    if (!std::getline(spectra, sline)) throw io::FormatError("spectra.csv has fewer rows than the manifest");
    TrainingSample s;
    s.id = f[0];
    s.class_name = f[2];
    s.class_label = std::stoi(f[3]);
    s.friction = csv::to_double(f[4]);
    s.rgb_patch = read_patch(dir / f[5]);
    for (const auto& v : csv::split(sline)) s.spectrum.push_back(csv::to_double(v));
    const std::string& split = f[1];
    if (split == "train") {
      data.train.push_back(std::move(s));
    } else if (split == "val") {
      data.val.push_back(std::move(s));
    } else if (split == "test") {
      data.test.push_back(std::move(s));
    } else if (split == "heldout") {
      data.heldout.push_back(std::move(s));
    } else {
      throw io::FormatError("manifest: unknown split '" + split + "'");
    }
  }
  return data;
}

}  // namespace rsnet::synth
