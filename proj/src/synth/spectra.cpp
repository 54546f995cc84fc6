#include "rsnet/synth/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rsnet::synth {

ResponseMatrix ResponseMatrix::gaussian(const WavelengthGrid& grid, std::array<double, 3> centers_nm,
                                        double width_nm) {
  grid.validate();
  Eigen::Matrix<double, 3, Eigen::Dynamic> m(3, grid.bands);
  for (int c = 0; c < 3; ++c) {
    for (int b = 0; b < grid.bands; ++b) {
      const double z = (grid.wavelength(b) - centers_nm[c]) / width_nm;
      m(c, b) = std::exp(-0.5 * z * z);
    }
  }
  return ResponseMatrix(std::move(m));
}

ResponseMatrix::ResponseMatrix(Eigen::Matrix<double, 3, Eigen::Dynamic> m) : m_(std::move(m)) {
  if ((m_.array() < 0.0).any()) throw std::invalid_argument("response matrix: negative sensitivity");
  for (int c = 0; c < 3; ++c) {
    if (!(m_.row(c).sum() > 0.0)) throw std::invalid_argument("response matrix: channel with zero total response");
  }
}

Rgb ResponseMatrix::response(std::span<const double> spectrum) const {
  if (static_cast<Eigen::Index>(spectrum.size()) != m_.cols()) {
    throw std::invalid_argument("response: spectrum has " + std::to_string(spectrum.size()) +
                                " bands, sensor expects " + std::to_string(m_.cols()));
  }
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (Eigen::Index b = 0; b < m_.cols(); ++b) acc += m_(c, b) * spectrum[b];
    out[c] = acc;
  }
  return out;
}

SpectralSignature canonical_spectrum(const MaterialSpec& spec, const WavelengthGrid& grid) {
  if (spec.spectrum_override) {
    if (static_cast<int>(spec.spectrum_override->size()) != grid.bands) {
      throw std::invalid_argument("material " + spec.name + ": spectrum override does not match the band count");
    }
    return *spec.spectrum_override;
  }
  SpectralSignature s(grid.bands, 0.0);
  for (int b = 0; b < grid.bands; ++b) {
    const double wl = grid.wavelength(b);
    double v = 0.0;
    for (const auto& bump : spec.bumps) {
      const double z = (wl - bump.center_nm) / bump.width_nm;
      v += bump.amplitude * std::exp(-0.5 * z * z);
    }
    s[b] = v;
  }
  return s;
}

Rgb render_rgb(std::span<const double> spectrum, const ResponseMatrix& r) {
  Rgb raw = r.response(spectrum);
  for (int c = 0; c < 3; ++c) raw[c] = std::clamp(raw[c] / r.row_sum(c), 0.0, 1.0);
  return raw;
}

double min_class_separation(const std::vector<MaterialSpec>& table, const WavelengthGrid& grid) {
  std::vector<SpectralSignature> spectra;
  for (const auto& m : table) spectra.push_back(canonical_spectrum(m, grid));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    for (std::size_t j = i + 1; j < spectra.size(); ++j) {
      double s = 0.0;
      for (int b = 0; b < grid.bands; ++b) s += (spectra[i][b] - spectra[j][b]) * (spectra[i][b] - spectra[j][b]);
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

double trapezoid(std::span<const double> y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

}  // namespace rsnet::synth
