#include "rsnet/nn/kernels.hpp"

#include <algorithm>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rsnet::nn::kernels {

namespace {

std::size_t in_index(const ConvGeometry& g, int c, int y, int x) {
  return (static_cast<std::size_t>(c) * g.h + y) * g.w + x;
}
std::size_t w_index(const ConvGeometry& g, int oc, int ic, int ky, int kx) {
  return ((static_cast<std::size_t>(oc) * g.cin + ic) * g.k + ky) * g.k + kx;
}

// Output columns ox for which ix = ox*stride - pad + kx lies inside [0, w).
void valid_range(int offset, int stride, int extent, int out_extent, int& lo, int& hi) {
  lo = 0;
  while (lo < out_extent && lo * stride + offset < 0) ++lo;
  hi = out_extent;
  while (hi > lo && (hi - 1) * stride + offset >= extent) --hi;
}

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelThreshold = 1L << 15;

long work(const ConvGeometry& g) {
  return static_cast<long>(g.cout) * g.cin * g.k * g.k * g.out_h() * g.out_w();
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> out) {
  const int oh = g.out_h(), ow = g.out_w();
  for (int oc = 0; oc < g.cout; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[oc];
        for (int ic = 0; ic < g.cin; ++ic) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.h) continue;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.w) continue;
              acc += weights[w_index(g, oc, ic, ky, kx)] * in[in_index(g, ic, iy, ix)];
            }
          }
        }
        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> weights,
                           std::span<double> grad_in) {
  const int oh = g.out_h(), ow = g.out_w();
  for (int oc = 0; oc < g.cout; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double go = grad_out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
        for (int ic = 0; ic < g.cin; ++ic) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.h) continue;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.w) continue;
              grad_in[in_index(g, ic, iy, ix)] += go * weights[w_index(g, oc, ic, ky, kx)];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_w, std::span<double> grad_b) {
  const int oh = g.out_h(), ow = g.out_w();
  for (int oc = 0; oc < g.cout; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double go = grad_out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
        if (!grad_b.empty()) grad_b[oc] += go;
        for (int ic = 0; ic < g.cin; ++ic) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.h) continue;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.w) continue;
              grad_w[w_index(g, oc, ic, ky, kx)] += go * in[in_index(g, ic, iy, ix)];
            }
          }
        }
      }
    }
  }
}

}  // namespace serial

namespace parallel {

void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> out) {
  const int oh = g.out_h(), ow = g.out_w();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const bool big = work(g) >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (int oc = 0; oc < g.cout; ++oc) {
    double* o = out.data() + oc * plane;
    std::fill(o, o + plane, bias.empty() ? 0.0 : bias[oc]);
    for (int ic = 0; ic < g.cin; ++ic) {
      const double* ip = in.data() + in_index(g, ic, 0, 0);
      for (int ky = 0; ky < g.k; ++ky) {
        int ylo, yhi;
        valid_range(ky - g.pad, g.stride, g.h, oh, ylo, yhi);
        for (int kx = 0; kx < g.k; ++kx) {
          int xlo, xhi;
          valid_range(kx - g.pad, g.stride, g.w, ow, xlo, xhi);
          const double wv = weights[w_index(g, oc, ic, ky, kx)];
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* irow = ip + static_cast<std::size_t>(oy * g.stride - g.pad + ky) * g.w;
            const int off = kx - g.pad;
            double* orow = o + static_cast<std::size_t>(oy) * ow;
            if (g.stride == 1) {
              for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * irow[ox + off];
            } else {
              for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wv * irow[ox * g.stride + off];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> weights,
                           std::span<double> grad_in) {
  const int oh = g.out_h(), ow = g.out_w();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const bool big = work(g) >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (int ic = 0; ic < g.cin; ++ic) {
    double* gi = grad_in.data() + in_index(g, ic, 0, 0);
    for (int oc = 0; oc < g.cout; ++oc) {
      const double* go = grad_out.data() + oc * plane;
      for (int ky = 0; ky < g.k; ++ky) {
        int ylo, yhi;
        valid_range(ky - g.pad, g.stride, g.h, oh, ylo, yhi);
        for (int kx = 0; kx < g.k; ++kx) {
          int xlo, xhi;
          valid_range(kx - g.pad, g.stride, g.w, ow, xlo, xhi);
          const double wv = weights[w_index(g, oc, ic, ky, kx)];
          for (int oy = ylo; oy < yhi; ++oy) {
            double* irow = gi + static_cast<std::size_t>(oy * g.stride - g.pad + ky) * g.w;
            const int off = kx - g.pad;
            const double* orow = go + static_cast<std::size_t>(oy) * ow;
            if (g.stride == 1) {
              for (int ox = xlo; ox < xhi; ++ox) irow[ox + off] += wv * orow[ox];
            } else {
              for (int ox = xlo; ox < xhi; ++ox) irow[ox * g.stride + off] += wv * orow[ox];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_w, std::span<double> grad_b) {
  const int oh = g.out_h(), ow = g.out_w();
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  const bool big = work(g) >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (int oc = 0; oc < g.cout; ++oc) {
    const double* go = grad_out.data() + oc * plane;
    if (!grad_b.empty()) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += go[i];
      grad_b[oc] += s;
    }
    for (int ic = 0; ic < g.cin; ++ic) {
      const double* ip = in.data() + in_index(g, ic, 0, 0);
      for (int ky = 0; ky < g.k; ++ky) {
        int ylo, yhi;
        valid_range(ky - g.pad, g.stride, g.h, oh, ylo, yhi);
        for (int kx = 0; kx < g.k; ++kx) {
          int xlo, xhi;
          valid_range(kx - g.pad, g.stride, g.w, ow, xlo, xhi);
          double acc = 0.0;
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* irow = ip + static_cast<std::size_t>(oy * g.stride - g.pad + ky) * g.w;
            const int off = kx - g.pad;
            const double* orow = go + static_cast<std::size_t>(oy) * ow;
            if (g.stride == 1) {
              for (int ox = xlo; ox < xhi; ++ox) acc += orow[ox] * irow[ox + off];
            } else {
              for (int ox = xlo; ox < xhi; ++ox) acc += orow[ox] * irow[ox * g.stride + off];
            }
          }
          grad_w[w_index(g, oc, ic, ky, kx)] += acc;
        }
      }
    }
  }
}

}  // namespace parallel

}  // namespace rsnet::nn::kernels
