#pragma once

#include <span>

namespace rsnet::nn::kernels {

/// Geometry of a square-kernel 2D convolution over a [cin, h, w] input.
struct ConvGeometry {
  int cin = 0, h = 0, w = 0;
  int cout = 0, k = 0;
  int stride = 1, pad = 0;

  int out_h() const { return (h + 2 * pad - k) / stride + 1; }
  int out_w() const { return (w + 2 * pad - k) / stride + 1; }
};

// Both namespaces implement the same contracts:
//   forward:         out = conv(in, weights) + bias (bias may be empty)
//   backward_input:  grad_in += conv^T(grad_out, weights)
//   backward_weight: grad_w += d/dw, grad_b += d/db (grad_b may be empty)
// `serial` is the direct textbook loop nest used as the test reference;
// `parallel` reorders loops for contiguous access and splits independent
// output planes across OpenMP threads. Each output element is owned by a
// single thread and summed in a fixed order, so results do not depend on the
// thread count.

namespace serial {
void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> weights,
                           std::span<double> grad_in);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_w, std::span<double> grad_b);
}  // namespace serial

namespace parallel {
void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> weights,
                           std::span<double> grad_in);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> grad_out, std::span<const double> in,
                            std::span<double> grad_w, std::span<double> grad_b);
}  // namespace parallel

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace rsnet::nn::kernels
