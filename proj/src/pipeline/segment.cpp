#include "rsnet/pipeline/segment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace rsnet::pipeline {

namespace {

// Separable box blur with replicated borders.
std::vector<double> box_blur(const nn::Tensor& image, int radius) {
  const int h = image.dim(1), w = image.dim(2);
  std::vector<double> out(image.values());
  if (radius == 0) return out;
  std::vector<double> tmp(out.size());
  const double inv = 1.0 / (2 * radius + 1);
  for (int c = 0; c < 3; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += image[base + y * w + std::clamp(x + d, 0, w - 1)];
        tmp[base + y * w + x] = acc * inv;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += tmp[base + std::clamp(y + d, 0, h - 1) * w + x];
        out[base + y * w + x] = acc * inv;
      }
    }
  }
  return out;
}

struct Growing {
  std::vector<std::size_t> pixels;
  std::array<double, 3> sum{};  // blurred
  std::array<double, 3> raw{};  // unblurred
  bool alive = true;

  double mean(int c) const { return sum[c] / static_cast<double>(pixels.size()); }
};

}  // namespace

void SegmentOptions::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("segment: tau must be positive");
  if (chroma_tau < 0.0) throw std::invalid_argument("segment: chroma_tau must be >= 0");
  if (!(shade_ratio > 0.0 && shade_ratio <= 1.0)) throw std::invalid_argument("segment: shade_ratio must lie in (0, 1]");
  if (blur_radius < 0) throw std::invalid_argument("segment: blur_radius must be >= 0");
  if (min_region_pixels < 1) throw std::invalid_argument("segment: min_region_pixels must be >= 1");
  if (min_patch_size < 1) throw std::invalid_argument("segment: min_patch_size must be >= 1");
  if (output_size < 1) throw std::invalid_argument("segment: output_size must be >= 1");
}

SquareCrop largest_inscribed_square(const std::vector<char>& mask, int width, int height) {
  if (mask.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("largest_inscribed_square: mask size mismatch");
  }
  std::vector<int> prev(width + 1, 0), cur(width + 1, 0);
  SquareCrop best;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      cur[x + 1] = mask[static_cast<std::size_t>(y) * width + x] ? 1 + std::min({prev[x], prev[x + 1], cur[x]}) : 0;
      if (cur[x + 1] > best.size) best = {x - cur[x + 1] + 1, y - cur[x + 1] + 1, cur[x + 1]};
    }
    std::swap(prev, cur);
  }
  return best;
}

nn::Tensor crop_resize(const nn::Tensor& image, const SquareCrop& crop, int out_size) {
  if (image.rank() != 3 || image.dim(0) != 3) throw nn::ShapeError("crop_resize: expected [3, H, W]");
  const int h = image.dim(1), w = image.dim(2);
  if (crop.size < 1 || crop.x < 0 || crop.y < 0 || crop.x + crop.size > w || crop.y + crop.size > h) {
    throw std::invalid_argument("crop_resize: crop outside the image");
  }
  nn::Tensor out({3, out_size, out_size});
  const double scale = static_cast<double>(crop.size) / out_size;
  for (int oy = 0; oy < out_size; ++oy) {
    const double sy = std::clamp((oy + 0.5) * scale - 0.5, 0.0, crop.size - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, crop.size - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < out_size; ++ox) {
      const double sx = std::clamp((ox + 0.5) * scale - 0.5, 0.0, crop.size - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, crop.size - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int yy, int xx) { return image.at(c, crop.y + yy, crop.x + xx); };
        const double top = fx == 0.0 ? px(y0, x0) : px(y0, x0) * (1 - fx) + px(y0, x1) * fx;
        const double bottom = fx == 0.0 ? px(y1, x0) : px(y1, x0) * (1 - fx) + px(y1, x1) * fx;
        out.at(c, oy, ox) = fy == 0.0 ? top : top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

Segmentation segment_patches(const nn::Tensor& image, const SegmentOptions& options) {
  options.validate();
  if (image.rank() != 3 || image.dim(0) != 3) throw nn::ShapeError("segment_patches: expected [3, H, W]");
  const int h = image.dim(1), w = image.dim(2);
  if (h < options.output_size || w < options.output_size) {
    throw std::invalid_argument("segment_patches: image smaller than the patch size " +
                                std::to_string(options.output_size));
  }
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const std::vector<double> blurred = box_blur(image, options.blur_radius);
  auto color = [&](std::size_t p, int c) { return blurred[c * n + p]; };

  // region growing against the running mean
  std::vector<int> labels(n, -1);
  std::vector<Growing> regions;
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (labels[seed] >= 0) continue;
    const int id = static_cast<int>(regions.size());
    Growing g;
    labels[seed] = id;
    g.pixels.push_back(seed);
    for (int c = 0; c < 3; ++c) {
      g.sum[c] = color(seed, c);
      g.raw[c] = image[c * n + seed];
    }
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      const int px = static_cast<int>(p % w), py = static_cast<int>(p / w);
      const std::size_t nbrs[4] = {px > 0 ? p - 1 : n, px + 1 < w ? p + 1 : n, py > 0 ? p - w : n,
                                   py + 1 < h ? p + w : n};
      for (std::size_t q : nbrs) {
        if (q == n || labels[q] >= 0) continue;
        double dist = 0.0;
        for (int c = 0; c < 3; ++c) dist = std::max(dist, std::abs(color(q, c) - g.mean(c)));
        if (dist > options.tau) continue;
        labels[q] = id;
        g.pixels.push_back(q);
        for (int c = 0; c < 3; ++c) {
          g.sum[c] += color(q, c);
          g.raw[c] += image[c * n + q];
        }
        queue.push_back(q);
      }
    }
    regions.push_back(std::move(g));
  }

  auto neighbours = [&](const Growing& g, int self) {
    std::vector<int> out;
    for (std::size_t p : g.pixels) {
      const int px = static_cast<int>(p % w), py = static_cast<int>(p / w);
      const std::size_t nbrs[4] = {px > 0 ? p - 1 : n, px + 1 < w ? p + 1 : n, py > 0 ? p - w : n,
                                   py + 1 < h ? p + w : n};
      for (std::size_t q : nbrs) {
        if (q != n && labels[q] != self) out.push_back(labels[q]);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  auto mean_dist = [&](int a, int b) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(regions[a].mean(c) - regions[b].mean(c)));
    return d;
  };
  auto merge = [&](int from, int into) {
    Growing& g = regions[from];
    Growing& t = regions[into];
    for (std::size_t p : g.pixels) labels[p] = into;
    t.pixels.insert(t.pixels.end(), g.pixels.begin(), g.pixels.end());
    for (int c = 0; c < 3; ++c) {
      t.sum[c] += g.sum[c];
      t.raw[c] += g.raw[c];
    }
    g.pixels.clear();
    g.alive = false;
  };
  // folds region i into its most similar neighbour; false when it has none
  auto absorb = [&](int i) {
    int target = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int other : neighbours(regions[i], i)) {
      const double d = mean_dist(i, other);
      if (d < best) {
        best = d;
        target = other;
      }
    }
    if (target < 0) return false;
    merge(i, target);
    return true;
  };
  auto square_side = [&](int i) {
    const Growing& g = regions[i];
    int x0 = w, y0 = h, x1 = 0, y1 = 0;
    for (std::size_t p : g.pixels) {
      x0 = std::min(x0, static_cast<int>(p % w));
      x1 = std::max(x1, static_cast<int>(p % w) + 1);
      y0 = std::min(y0, static_cast<int>(p / w));
      y1 = std::max(y1, static_cast<int>(p / w) + 1);
    }
    std::vector<char> mask(static_cast<std::size_t>(x1 - x0) * (y1 - y0), 0);
    for (std::size_t p : g.pixels) mask[(p / w - y0) * (x1 - x0) + (p % w - x0)] = 1;
    return largest_inscribed_square(mask, x1 - x0, y1 - y0).size;
  };
  auto by_size = [&]() {
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(regions.size()); ++i) {
      if (regions[i].alive) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return regions[a].pixels.size() < regions[b].pixels.size(); });
    return order;
  };

  // 1. small regions, smallest first
  for (bool changed = true; changed;) {
    changed = false;
    for (int i : by_size()) {
      if (!regions[i].alive || static_cast<int>(regions[i].pixels.size()) >= options.min_region_pixels) continue;
      if (absorb(i)) {
        changed = true;
        break;
      }
    }
  }
  // 2. strips no wider than the blur transition band
  for (bool changed = true; changed;) {
    changed = false;
    for (int i : by_size()) {
      if (!regions[i].alive || square_side(i) > 2 * options.blur_radius) continue;
      if (absorb(i)) changed = true;
    }
  }
  // 3. adjacent regions that agree in colour, or in chromaticity at a
  // similar brightness (multiplicative texture splits a surface into shades
  // of one chromaticity); most similar pair first
  auto merge_score = [&](int a, int b) {
    double score = mean_dist(a, b) / options.tau;
    if (options.chroma_tau > 0.0) {
      const auto& ra = regions[a].raw;
      const auto& rb = regions[b].raw;
      const double sa = ra[0] + ra[1] + ra[2], sb = rb[0] + rb[1] + rb[2];
      const double na = static_cast<double>(regions[a].pixels.size()), nb = static_cast<double>(regions[b].pixels.size());
      if (sa > 0.0 && sb > 0.0 && std::min(sa / na, sb / nb) >= options.shade_ratio * std::max(sa / na, sb / nb)) {
        double chroma = 0.0;
        for (int c = 0; c < 3; ++c) chroma = std::max(chroma, std::abs(ra[c] / sa - rb[c] / sb));
        score = std::min(score, chroma / options.chroma_tau);
      }
    }
    return score;
  };
  for (;;) {
    int from = -1, into = -1;
    double best = 1.0;
    for (int i : by_size()) {
      for (int other : neighbours(regions[i], i)) {
        const double d = merge_score(i, other);
        if (d <= best && (from < 0 || d < best)) {
          best = d;
          from = i;
          into = other;
        }
      }
    }
    if (from < 0) break;
    if (regions[from].pixels.size() > regions[into].pixels.size()) std::swap(from, into);
    merge(from, into);
  }

  // 4. boundary refinement on the unblurred image: pixels within the blur
  // band move to the nearby region whose raw mean is closest
  if (options.blur_radius > 0) {
    std::vector<std::array<double, 3>> raw_mean(regions.size(), {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (!regions[i].alive) continue;
      for (std::size_t p : regions[i].pixels) {
        for (int c = 0; c < 3; ++c) raw_mean[i][c] += image[c * n + p];
      }
      for (int c = 0; c < 3; ++c) raw_mean[i][c] /= static_cast<double>(regions[i].pixels.size());
    }
    const int r = options.blur_radius;
    std::vector<int> refined = labels;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        auto dist = [&](int id) {
          double d = 0.0;
          for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(image[c * n + p] - raw_mean[id][c]));
          return d;
        };
        int best = labels[p];
        double best_d = dist(best);
        for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
          for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
            const int id = labels[static_cast<std::size_t>(yy) * w + xx];
            if (id == best) continue;
            const double d = dist(id);
            if (d < best_d || (d == best_d && id < best)) {
              best = id;
              best_d = d;
            }
          }
        }
        refined[p] = best;
      }
    }
    labels = std::move(refined);
  }

  // compact ids by first appearance
  std::vector<int> remap(regions.size(), -1);
  int count = 0;
  for (std::size_t p = 0; p < n; ++p) {
    int& r = remap[labels[p]];
    if (r < 0) r = count++;
    labels[p] = r;
  }

  Segmentation seg;
  seg.width = w;
  seg.height = h;
  seg.regions.resize(count);
  for (int i = 0; i < count; ++i) {
    Region& r = seg.regions[i];
    r.id = i;
    r.x0 = w;
    r.y0 = h;
  }
  for (std::size_t p = 0; p < n; ++p) {
    Region& r = seg.regions[labels[p]];
    const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
    ++r.pixels;
    for (int c = 0; c < 3; ++c) r.mean_rgb[c] += image[c * n + p];
    r.x0 = std::min(r.x0, x);
    r.y0 = std::min(r.y0, y);
    r.x1 = std::max(r.x1, x + 1);
    r.y1 = std::max(r.y1, y + 1);
  }
  for (Region& r : seg.regions) {
    for (double& v : r.mean_rgb) v /= r.pixels;
    const int bw = r.x1 - r.x0, bh = r.y1 - r.y0;
    std::vector<char> mask(static_cast<std::size_t>(bw) * bh);
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        mask[static_cast<std::size_t>(y) * bw + x] = labels[static_cast<std::size_t>(r.y0 + y) * w + r.x0 + x] == r.id;
      }
    }
    r.square = largest_inscribed_square(mask, bw, bh);
    r.square.x += r.x0;
    r.square.y += r.y0;
    if (r.square.size >= options.min_patch_size) {
      r.patch = static_cast<int>(seg.patches.size());
      seg.patches.push_back(crop_resize(image, r.square, options.output_size));
    } else {
      seg.skipped.push_back(r.id);
    }
  }
  seg.labels = std::move(labels);
  return seg;
}

double label_iou(const std::vector<int>& a, int id_a, const std::vector<int>& b, int id_b) {
  if (a.size() != b.size()) throw std::invalid_argument("label_iou: label maps differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] == id_a, in_b = b[i] == id_b;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> best_region_iou(const std::vector<int>& truth, int truth_regions, const Segmentation& seg) {
  std::vector<double> best(truth_regions, 0.0);
  for (int t = 0; t < truth_regions; ++t) {
    for (const Region& r : seg.regions) best[t] = std::max(best[t], label_iou(truth, t, seg.labels, r.id));
  }
  return best;
}

}  // namespace rsnet::pipeline
