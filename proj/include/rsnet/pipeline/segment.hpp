#pragma once

#include <array>
#include <vector>

#include "rsnet/nn/tensor.hpp"

namespace rsnet::pipeline {

struct SegmentOptions {
  double tau = 0.05;           // RGB L-infinity threshold against the running region mean
  int blur_radius = 6;         // box blur half-width applied before the flood fill
  double chroma_tau = 0.03;    // adjacent regions this close in chromaticity merge (0 disables)
  double shade_ratio = 0.6;    // ... when their brightness ratio is at least this
  int min_region_pixels = 64;  // smaller regions merge into their most similar neighbour
  int min_patch_size = 8;      // regions whose inscribed square is smaller are skipped
  int output_size = 32;        // model input size

  void validate() const;
};

struct SquareCrop {
  int x = 0;
  int y = 0;
  int size = 0;
};

struct Region {
  int id = 0;
  int pixels = 0;
  std::array<double, 3> mean_rgb{};  // of the unblurred image
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // bounding box, half-open
  SquareCrop square;                  // largest inscribed axis-aligned square
  int patch = -1;                     // index into Segmentation::patches, -1 if skipped
};

struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // per pixel region id; ids follow first appearance in raster order
  std::vector<Region> regions;
  std::vector<nn::Tensor> patches;  // [3, output_size, output_size], in region order
  std::vector<int> skipped;         // ids of regions too small for a patch
};

/// Flood-fill segmentation of a [3, H, W] image followed by square cropping.
/// Throws std::invalid_argument when the image is smaller than output_size.
Segmentation segment_patches(const nn::Tensor& image, const SegmentOptions& options = {});

/// Largest all-true axis-aligned square in a row-major mask; ties go to the
/// first bottom-right corner in raster order.
SquareCrop largest_inscribed_square(const std::vector<char>& mask, int width, int height);

/// Bilinear resample of the square crop to out_size x out_size, sampling at
/// pixel centres; an equal-size crop is copied exactly.
nn::Tensor crop_resize(const nn::Tensor& image, const SquareCrop& crop, int out_size);

/// Intersection over union of {a == id_a} and {b == id_b}.
double label_iou(const std::vector<int>& a, int id_a, const std::vector<int>& b, int id_b);

/// For each ground-truth region, the best IoU over the segmented regions.
std::vector<double> best_region_iou(const std::vector<int>& truth, int truth_regions, const Segmentation& seg);

}  // namespace rsnet::pipeline
