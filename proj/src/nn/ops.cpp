#include "rsnet/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rsnet/nn/kernels.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::nn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands recorded on different tapes");
}

template <class F, class D>
Var unary(Var x, F f, D df) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  const std::size_t xid = x.id;
  return x.tape->record(std::move(out), {x}, [xid, df](Tape& t, std::size_t self) {
    if (!t.requires_grad(xid)) return;
    const Tensor& g = t.grad_accum(self);
    const Tensor& in = t.value(xid);
    const Tensor& out = t.value(self);
    Tensor& gx = t.grad_accum(xid);
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] += g[i] * df(in[i], out[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Var conv2d(Var input, Var kernels, int stride, int padding) {
  return conv2d(input, kernels, Var{nullptr, 0}, stride, padding);
}

Var conv2d(Var input, Var kernels, Var bias, int stride, int padding) {
  same_tape(input, kernels);
  const bool has_bias = bias.tape != nullptr;
  const Tensor& x = input.value();
  const Tensor& w = kernels.value();
  require(x.rank() == 3, "conv2d: input must be [C,H,W], got " + shape_str(x.shape()));
  require(w.rank() == 4, "conv2d: kernels must be [Cout,Cin,k,k], got " + shape_str(w.shape()));
  require(w.dim(1) == x.dim(0), "conv2d: kernel expects " + std::to_string(w.dim(1)) + " input channels, input has " +
                                    std::to_string(x.dim(0)) + " (input " + shape_str(x.shape()) + ", kernels " +
                                    shape_str(w.shape()) + ")");
  require(w.dim(2) == w.dim(3), "conv2d: kernels must be square, got " + shape_str(w.shape()));
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(padding >= 0, "conv2d: padding must be >= 0");
  kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), w.dim(0), w.dim(2), stride, padding};
  require(g.k <= g.h + 2 * padding && g.k <= g.w + 2 * padding,
          "conv2d: kernel " + std::to_string(g.k) + " larger than padded input " + shape_str(x.shape()));
  if (has_bias) {
    same_tape(input, bias);
    require(bias.value().size() == static_cast<std::size_t>(g.cout), "conv2d: bias must have Cout entries");
  }
  Tensor out({g.cout, g.out_h(), g.out_w()});
  kernels::parallel::conv2d_forward(g, x.data(), w.data(), has_bias ? bias.value().data() : std::span<const double>{},
                                    out.data());
  std::vector<Var> parents{input, kernels};
  if (has_bias) parents.push_back(bias);
  const std::size_t xid = input.id, wid = kernels.id, bid = bias.id;
  return input.tape->record(std::move(out), parents, [g, xid, wid, bid, has_bias](Tape& t, std::size_t self) {
    const Tensor& go = t.grad_accum(self);
    if (t.requires_grad(xid)) {
      kernels::parallel::conv2d_backward_input(g, go.data(), t.value(wid).data(), t.grad_accum(xid).data());
    }
    const bool bias_grad = has_bias && t.requires_grad(bid);
    if (t.requires_grad(wid)) {
      kernels::parallel::conv2d_backward_weight(g, go.data(), t.value(xid).data(), t.grad_accum(wid).data(),
                                                bias_grad ? t.grad_accum(bid).data() : std::span<double>{});
    } else if (bias_grad) {
      Tensor& gb = t.grad_accum(bid);
      const std::size_t plane = static_cast<std::size_t>(g.out_h()) * g.out_w();
      for (int oc = 0; oc < g.cout; ++oc) {
        for (std::size_t i = 0; i < plane; ++i) gb[oc] += go[oc * plane + i];
      }
    }
  });
}

Var maxpool2d(Var input, int window, int stride) {
  const Tensor& x = input.value();
  require(x.rank() == 3, "maxpool2d: input must be [C,H,W], got " + shape_str(x.shape()));
  require(window >= 1 && stride >= 1, "maxpool2d: window and stride must be >= 1");
  require(window <= x.dim(1) && window <= x.dim(2),
          "maxpool2d: window " + std::to_string(window) + " larger than input " + shape_str(x.shape()));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
  Tensor out({c, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::size_t best = (static_cast<std::size_t>(ch) * h + oy * stride) * w + ox * stride;
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const std::size_t idx = (static_cast<std::size_t>(ch) * h + oy * stride + dy) * w + ox * stride + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(ch) * oh + oy) * ow + ox;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  const std::size_t xid = input.id;
  return input.tape->record(std::move(out), {input}, [xid, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const Tensor& go = t.grad_accum(self);
    Tensor& gx = t.grad_accum(xid);
    for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += go[o];
  });
}

Var concat_channels(Var a, Var b) { return concat_channels(std::vector<Var>{a, b}); }

Var concat_channels(const std::vector<Var>& inputs) {
  std::vector<Var> parts;
  for (const Var& v : inputs) {
    if (v.value().size() > 0) parts.push_back(v);
  }
  require(!parts.empty(), "concat_channels: no non-empty inputs");
  if (parts.size() == 1) return parts.front();
  const Tensor& first = parts.front().value();
  require(first.rank() == 3, "concat_channels: inputs must be [C,H,W]");
  int channels = 0;
  for (const Var& v : parts) {
    same_tape(parts.front(), v);
    const Tensor& t = v.value();
    require(t.rank() == 3 && t.dim(1) == first.dim(1) && t.dim(2) == first.dim(2),
            "concat_channels: spatial mismatch " + shape_str(first.shape()) + " vs " + shape_str(t.shape()));
    channels += t.dim(0);
  }
  Tensor out({channels, first.dim(1), first.dim(2)});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& v : parts) {
    const Tensor& t = v.value();
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + off);
    ids.push_back(v.id);
    offsets.push_back(off);
    off += t.size();
  }
  return parts.front().tape->record(std::move(out), parts, [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& go = t.grad_accum(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.requires_grad(ids[i])) continue;
      Tensor& gx = t.grad_accum(ids[i]);
      for (std::size_t j = 0; j < gx.size(); ++j) gx[j] += go[offsets[i] + j];
    }
  });
}

Var dense_layer(const std::vector<Var>& inputs, Var kernels, Var bias) {
  require(!inputs.empty(), "dense_layer: no inputs");
  for (const Var& v : inputs) {
    const Tensor& t = v.value();
    const Tensor& f = inputs.front().value();
    require(t.rank() == 3 && t.dim(1) == f.dim(1) && t.dim(2) == f.dim(2),
            "dense_layer: inputs must share spatial dims, got " + shape_str(f.shape()) + " and " + shape_str(t.shape()));
  }
  require(kernels.value().rank() == 4 && kernels.value().dim(2) == 3, "dense_layer: expects 3x3 kernels");
  return relu(conv2d(concat_channels(inputs), kernels, bias, 1, 1));
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var gelu(Var x) {
  return unary(
      x, [](double v) { return v * normal_cdf(v); },
      [](double v, double) {
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return normal_cdf(v) + v * pdf;
      });
}

Var softplus(Var x) {
  return unary(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) { return stable_sigmoid(v); });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return stable_sigmoid(v); }, [](double, double s) { return s * (1.0 - s); });
}

Var softmax(Var logits) {
  const Tensor& z = logits.value();
  require(z.size() > 0, "softmax: empty input");
  const double zmax = *std::max_element(z.data().begin(), z.data().end());
  Tensor p(z.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    total += p[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) p[i] /= total;
  const std::size_t zid = logits.id;
  return logits.tape->record(std::move(p), {logits}, [zid](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    const Tensor& p = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    Tensor& gz = t.grad_accum(zid);
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] += p[i] * (g[i] - dot);
  });
}

Var dropout(Var x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& in = x.value();
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(in.size());
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = in[i] * mask[i];
  }
  const std::size_t xid = x.id;
  return x.tape->record(std::move(out), {x}, [xid, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    Tensor& gx = t.grad_accum(xid);
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var linear(Var x, Var weights, Var bias) {
  same_tape(x, weights);
  same_tape(x, bias);
  const Tensor& in = x.value();
  const Tensor& w = weights.value();
  require(w.rank() == 2, "linear: weights must be [out,in], got " + shape_str(w.shape()));
  const int n_out = w.dim(0), n_in = w.dim(1);
  require(in.size() == static_cast<std::size_t>(n_in),
          "linear: input has " + std::to_string(in.size()) + " values, weights expect " + std::to_string(n_in));
  require(bias.value().size() == static_cast<std::size_t>(n_out), "linear: bias must have " + std::to_string(n_out) +
                                                                        " values");
  Tensor out({n_out});
  for (int o = 0; o < n_out; ++o) {
    const double* row = w.data().data() + static_cast<std::size_t>(o) * n_in;
    double acc = bias.value()[o];
    for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
  const std::size_t xid = x.id, wid = weights.id, bid = bias.id;
  return x.tape->record(std::move(out), {x, weights, bias}, [xid, wid, bid, n_in, n_out](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    const Tensor& w = t.value(wid);
    if (t.requires_grad(xid)) {
      Tensor& gx = t.grad_accum(xid);
      for (int o = 0; o < n_out; ++o) {
        const double* row = w.data().data() + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) gx[i] += row[i] * g[o];
      }
    }
    if (t.requires_grad(wid)) {
      const Tensor& in = t.value(xid);
      Tensor& gw = t.grad_accum(wid);
      for (int o = 0; o < n_out; ++o) {
        double* row = gw.data().data() + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) row[i] += g[o] * in[i];
      }
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_accum(bid);
      for (int o = 0; o < n_out; ++o) gb[o] += g[o];
    }
  });
}

Var flatten(Var x) {
  const std::size_t xid = x.id;
  return x.tape->record(x.value().reshaped({static_cast<int>(x.size())}), {x}, [xid](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    Tensor& gx = t.grad_accum(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require(a.shape() == b.shape(), "add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = a.value();
  out.add_inplace(b.value());
  const std::size_t aid = a.id, bid = b.id;
  return a.tape->record(std::move(out), {a, b}, [aid, bid](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    if (t.requires_grad(aid)) t.grad_accum(aid).add_inplace(g);
    if (t.requires_grad(bid)) t.grad_accum(bid).add_inplace(g);
  });
}

Var scale(Var x, double factor) { return affine(x, factor, 0.0); }

Var affine(Var x, double factor, double offset) {
  return unary(
      x, [factor, offset](double v) { return factor * v + offset; }, [factor](double, double) { return factor; });
}

Var sum(Var x) {
  const Tensor& in = x.value();
  double s = 0.0;
  for (double v : in.data()) s += v;
  const std::size_t xid = x.id;
  return x.tape->record(Tensor::scalar(s), {x}, [xid](Tape& t, std::size_t self) {
    const double g = t.grad_accum(self)[0];
    Tensor& gx = t.grad_accum(xid);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var stack(const std::vector<Var>& scalars) {
  require(!scalars.empty(), "stack: empty input");
  Tensor out({static_cast<int>(scalars.size())});
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    same_tape(scalars.front(), scalars[i]);
    require(scalars[i].size() == 1, "stack: inputs must hold one value each");
    out[i] = scalars[i].value()[0];
    ids.push_back(scalars[i].id);
  }
  return scalars.front().tape->record(std::move(out), scalars, [ids](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_accum(self);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) t.grad_accum(ids[i])[0] += g[i];
    }
  });
}

Var mean(const std::vector<Var>& scalars) { return scale(sum(stack(scalars)), 1.0 / static_cast<double>(scalars.size())); }

Var mse_loss(Var pred, Var target) {
  same_tape(pred, target);
  require(pred.shape() == target.shape(),
          "mse_loss: prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  const Tensor& p = pred.value();
  const Tensor& y = target.value();
  require(p.size() > 0, "mse_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
  const double n = static_cast<double>(p.size());
  const std::size_t pid = pred.id, yid = target.id;
  return pred.tape->record(Tensor::scalar(s / n), {pred, target}, [pid, yid, n](Tape& t, std::size_t self) {
    const double g = t.grad_accum(self)[0];
    const Tensor& p = t.value(pid);
    const Tensor& y = t.value(yid);
    if (t.requires_grad(pid)) {
      Tensor& gp = t.grad_accum(pid);
      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * 2.0 / n * (p[i] - y[i]);
    }
    if (t.requires_grad(yid)) {
      Tensor& gy = t.grad_accum(yid);
      for (std::size_t i = 0; i < p.size(); ++i) gy[i] -= g * 2.0 / n * (p[i] - y[i]);
    }
  });
}

Var cross_entropy(Var probs, int label) {
  const Tensor& p = probs.value();
  if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(p.size()) + ")");
  }
  const std::size_t pid = probs.id;
  return probs.tape->record(Tensor::scalar(-std::log(p[label])), {probs}, [pid, label](Tape& t, std::size_t self) {
    const double g = t.grad_accum(self)[0];
    t.grad_accum(pid)[label] -= g / t.value(pid)[label];
  });
}

Var l1_loss(Var pred, Var target) {
  same_tape(pred, target);
  const Tensor& p = pred.value();
  const Tensor& y = target.value();
  if (p.size() == 0) throw std::invalid_argument("l1_loss: empty batch");
  require(p.size() == y.size(), "l1_loss: length mismatch " + shape_str(p.shape()) + " vs " + shape_str(y.shape()));
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - y[i]);
  const double n = static_cast<double>(p.size());
  const std::size_t pid = pred.id, yid = target.id;
  return pred.tape->record(Tensor::scalar(s / n), {pred, target}, [pid, yid, n](Tape& t, std::size_t self) {
    const double g = t.grad_accum(self)[0];
    const Tensor& p = t.value(pid);
    const Tensor& y = t.value(yid);
    auto sign = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
    if (t.requires_grad(pid)) {
      Tensor& gp = t.grad_accum(pid);
      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g / n * sign(p[i] - y[i]);
    }
    if (t.requires_grad(yid)) {
      Tensor& gy = t.grad_accum(yid);
      for (std::size_t i = 0; i < p.size(); ++i) gy[i] -= g / n * sign(p[i] - y[i]);
    }
  });
}

Var combined_loss(Var task, Var spec, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("combined_loss: alpha must be in [0, 1]");
  same_tape(task, spec);
  require(task.size() == 1 && spec.size() == 1, "combined_loss: losses must be scalars");
  const double v = alpha * task.value()[0] + (1.0 - alpha) * spec.value()[0];
  const std::size_t tid = task.id, sid = spec.id;
  return task.tape->record(Tensor::scalar(v), {task, spec}, [tid, sid, alpha](Tape& t, std::size_t self) {
    const double g = t.grad_accum(self)[0];
    if (t.requires_grad(tid)) t.grad_accum(tid)[0] += alpha * g;
    if (t.requires_grad(sid)) t.grad_accum(sid)[0] += (1.0 - alpha) * g;
  });
}

}  // namespace rsnet::nn
