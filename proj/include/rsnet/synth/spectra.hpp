#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rsnet/synth/materials.hpp"

namespace rsnet {

/// Non-negative intensities over the bands of a WavelengthGrid.
using SpectralSignature = std::vector<double>;

}  // namespace rsnet

namespace rsnet::synth {

using Rgb = std::array<double, 3>;

/// 3 x B sensor sensitivities. Rows are Gaussian curves (default centers
/// 460/550/620 nm); rendering divides each channel by its row sum so a flat
/// spectrum of level v renders as gray (v, v, v).
class ResponseMatrix {
 public:
  static ResponseMatrix gaussian(const WavelengthGrid& grid, std::array<double, 3> centers_nm = {460.0, 550.0, 620.0},
                                 double width_nm = 40.0);

  explicit ResponseMatrix(Eigen::Matrix<double, 3, Eigen::Dynamic> m);

  int bands() const { return static_cast<int>(m_.cols()); }
  const Eigen::Matrix<double, 3, Eigen::Dynamic>& matrix() const { return m_; }
  double row_sum(int channel) const { return m_.row(channel).sum(); }

  /// Raw R * spectrum, linear in the spectrum.
  Rgb response(std::span<const double> spectrum) const;

 private:
  Eigen::Matrix<double, 3, Eigen::Dynamic> m_;
};

SpectralSignature canonical_spectrum(const MaterialSpec& spec, const WavelengthGrid& grid);

/// Row-normalized response clamped to [0, 1].
Rgb render_rgb(std::span<const double> spectrum, const ResponseMatrix& r);

/// Smallest pairwise L2 distance between the canonical spectra of a table.
double min_class_separation(const std::vector<MaterialSpec>& table, const WavelengthGrid& grid);

/// Required separation for the default training classes on the default grid.
inline constexpr double kClassSeparation = 0.5;

double trapezoid(std::span<const double> y, double dx);

}  // namespace rsnet::synth
