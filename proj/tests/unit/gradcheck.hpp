#pragma once

// Central finite-difference oracle for tape gradients. Test-only: evaluates
// the function through fresh tapes of constants, independent of backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rsnet/nn/ops.hpp"
#include "rsnet/util/rng.hpp"

namespace gradcheck {

using rsnet::nn::Parameter;
using rsnet::nn::Tape;
using rsnet::nn::Tensor;
using rsnet::nn::Var;

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct Result {
  double max_violation = 0.0;  // max of |a-n| / (rtol*max(|a|,|n|) + atol); pass iff <= 1
  double max_abs_err = 0.0;
  std::size_t checked = 0;
};

inline double evaluate(const std::vector<Tensor>& inputs, const Builder& f) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value()[0];
}

inline std::vector<Tensor> analytic(const std::vector<Tensor>& inputs, const Builder& f) {
  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (const auto& t : inputs) params.emplace_back("x", t);
  Tape tape;
  std::vector<Var> vars;
  for (auto& p : params) vars.push_back(tape.parameter(p));
  tape.backward(f(tape, vars));
  std::vector<Tensor> grads;
  for (auto& p : params) grads.push_back(p.grad);
  return grads;
}

inline Result check(const std::vector<Tensor>& inputs, const Builder& f, double h = 1e-5, double rtol = 1e-5,
                    double atol = 1e-8) {
  const auto grads = analytic(inputs, f);
  Result r;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x0 = work[k][i];
      work[k][i] = x0 + h;
      const double fp = evaluate(work, f);
      work[k][i] = x0 - h;
      const double fm = evaluate(work, f);
      work[k][i] = x0;
      const double num = (fp - fm) / (2.0 * h);
      const double a = grads[k][i];
      const double err = std::abs(a - num);
      r.max_abs_err = std::max(r.max_abs_err, err);
      r.max_violation = std::max(r.max_violation, err / (rtol * std::max(std::abs(a), std::abs(num)) + atol));
      ++r.checked;
    }
  }
  return r;
}

inline Tensor random_tensor(rsnet::nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  rsnet::Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Scalar projection sum_i c_i * y_i with fixed random weights, so that
/// gradient errors cannot cancel the way they can under a plain sum.
inline Var project(Tape& tape, Var y, std::uint64_t seed) {
  Tensor w = random_tensor({1, static_cast<int>(y.size())}, seed ^ 0xabcdefULL, 0.5, 1.5);
  return rsnet::nn::linear(rsnet::nn::flatten(y), tape.constant(w), tape.constant(Tensor({1}, 0.0)));
}

}  // namespace gradcheck

namespace gradcheck {

/// One differentiable operation under test: inputs and scalar-valued builder
/// generated from a seed.
struct Case {
  const char* name;
  std::function<std::pair<std::vector<Tensor>, Builder>(std::uint64_t seed)> make;
};

inline std::vector<Case> op_suite() {
  namespace nn = rsnet::nn;
  std::vector<Case> cases;
  cases.push_back({"conv2d sum(output) w.r.t. input", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({3, 8, 8}, s)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        Var k = t.constant(random_tensor({4, 3, 3, 3}, s + 1));
                                        return nn::sum(nn::conv2d(v[0], k, 1, 0));
                                      })};
                   }});
  cases.push_back({"conv2d input+kernels+bias, stride 2 pad 1", [](std::uint64_t s) {
                     return std::pair{
                         std::vector<Tensor>{random_tensor({3, 7, 7}, s), random_tensor({2, 3, 3, 3}, s + 1),
                                             random_tensor({2}, s + 2)},
                         Builder([s](Tape& t, const std::vector<Var>& v) {
                           return project(t, nn::conv2d(v[0], v[1], v[2], 2, 1), s);
                         })};
                   }});
  cases.push_back({"maxpool2d", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({2, 8, 8}, s)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::maxpool2d(v[0], 2, 2), s);
                                      })};
                   }});
  cases.push_back({"dense block (2 layers)", [](std::uint64_t s) {
                     return std::pair{
                         std::vector<Tensor>{random_tensor({3, 6, 6}, s), random_tensor({2, 3, 3, 3}, s + 1),
                                             random_tensor({2}, s + 2), random_tensor({2, 5, 3, 3}, s + 3),
                                             random_tensor({2}, s + 4)},
                         Builder([s](Tape& t, const std::vector<Var>& v) {
                           Var x1 = nn::dense_layer({v[0]}, v[1], v[2]);
                           Var x2 = nn::dense_layer({v[0], x1}, v[3], v[4]);
                           return project(t, nn::concat_channels({v[0], x1, x2}), s);
                         })};
                   }});
  cases.push_back({"concat_channels", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({2, 3, 3}, s), random_tensor({3, 3, 3}, s + 1)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::concat_channels(v[0], v[1]), s);
                                      })};
                   }});
  cases.push_back({"relu", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({16}, s)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::relu(v[0]), s);
                                      })};
                   }});
  cases.push_back({"gelu", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({16}, s, -3.0, 3.0)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::gelu(v[0]), s);
                                      })};
                   }});
  cases.push_back({"softplus", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({16}, s, -4.0, 4.0)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::softplus(v[0]), s);
                                      })};
                   }});
  cases.push_back({"sigmoid", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({16}, s, -4.0, 4.0)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::sigmoid(v[0]), s);
                                      })};
                   }});
  cases.push_back({"softmax", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({6}, s, -2.0, 2.0)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::softmax(v[0]), s);
                                      })};
                   }});
  cases.push_back({"softmax + cross_entropy", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({6}, s, -2.0, 2.0)},
                                      Builder([s](Tape&, const std::vector<Var>& v) {
                                        return nn::cross_entropy(nn::softmax(v[0]), static_cast<int>(s % 6));
                                      })};
                   }});
  cases.push_back({"dropout (training)", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({32}, s)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::dropout(v[0], 0.3, true, s), s);
                                      })};
                   }});
  cases.push_back({"linear", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({5}, s), random_tensor({4, 5}, s + 1),
                                                          random_tensor({4}, s + 2)},
                                      Builder([s](Tape& t, const std::vector<Var>& v) {
                                        return project(t, nn::linear(v[0], v[1], v[2]), s);
                                      })};
                   }});
  cases.push_back({"mse_loss", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({8}, s), random_tensor({8}, s + 1)},
                                      Builder([](Tape&, const std::vector<Var>& v) { return nn::mse_loss(v[0], v[1]); })};
                   }});
  cases.push_back({"l1_loss", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({8}, s), random_tensor({8}, s + 1)},
                                      Builder([](Tape&, const std::vector<Var>& v) { return nn::l1_loss(v[0], v[1]); })};
                   }});
  cases.push_back({"combined_loss", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({1}, s), random_tensor({1}, s + 1)},
                                      Builder([](Tape&, const std::vector<Var>& v) {
                                        return nn::combined_loss(v[0], v[1], 0.7);
                                      })};
                   }});
  cases.push_back({"stack/mean/affine/add", [](std::uint64_t s) {
                     return std::pair{std::vector<Tensor>{random_tensor({1}, s), random_tensor({1}, s + 1),
                                                          random_tensor({1}, s + 2)},
                                      Builder([](Tape&, const std::vector<Var>& v) {
                                        Var m = nn::mean({v[0], v[1], nn::affine(v[2], 3.0, 0.5)});
                                        return nn::add(m, nn::scale(v[0], -2.0));
                                      })};
                   }});
  return cases;
}

}  // namespace gradcheck
