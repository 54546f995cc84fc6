// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to compare
// thread counts; on one core the two mostly measure loop order.

#include <vector>

#include <benchmark/benchmark.h>

#include "rsnet/mppi/mppi.hpp"
#include "rsnet/nn/kernels.hpp"
#include "rsnet/util/rng.hpp"

using namespace rsnet;
namespace k = rsnet::nn::kernels;

namespace {

struct ConvCase {
  k::ConvGeometry g;
  std::vector<double> in, w, b, out, grad_out, grad_in, grad_w, grad_b;

  explicit ConvCase(int cin, int size, int cout, int kernel) {
    g = {cin, size, size, cout, kernel, 1, kernel / 2};
    Rng rng(1);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (double& x : v) x = rng.uniform(-1.0, 1.0);
    };
    const std::size_t out_n = static_cast<std::size_t>(cout) * g.out_h() * g.out_w();
    fill(in, static_cast<std::size_t>(cin) * size * size);
    fill(w, static_cast<std::size_t>(cout) * cin * kernel * kernel);
    fill(b, cout);
    fill(grad_out, out_n);
    out.assign(out_n, 0.0);
    grad_in.assign(in.size(), 0.0);
    grad_w.assign(w.size(), 0.0);
    grad_b.assign(b.size(), 0.0);
  }
};

// desk-scale layer shapes: stem, dense layer in block 1, dense layer in block 2
ConvCase make_case(int which) {
  switch (which) {
    case 0: return ConvCase(3, 32, 8, 3);
    case 1: return ConvCase(16, 32, 16, 1);
    default: return ConvCase(40, 16, 4, 3);
  }
}

template <auto Fn>
void BM_conv_forward(benchmark::State& state) {
  ConvCase c = make_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Fn(c.g, c.in, c.w, c.b, c.out);
    benchmark::DoNotOptimize(c.out.data());
  }
}

template <auto Fn>
void BM_conv_backward_input(benchmark::State& state) {
  ConvCase c = make_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Fn(c.g, c.grad_out, c.w, c.grad_in);
    benchmark::DoNotOptimize(c.grad_in.data());
  }
}

template <auto Fn>
void BM_conv_backward_weight(benchmark::State& state) {
  ConvCase c = make_case(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Fn(c.g, c.grad_out, c.in, c.grad_w, c.grad_b);
    benchmark::DoNotOptimize(c.grad_w.data());
  }
}

template <auto Fn>
void BM_mppi_update(benchmark::State& state) {
  mppi::GridWorld world = mppi::GridWorld::uniform(48, 32, 0.25);
  world.goal_x = 11.0;
  world.goal_y = 7.0;
  world.patch = mppi::CellRect{16, 10, 32, 22};
  world.fill_patch(5.0);
  mppi::MppiConfig config;
  config.samples = static_cast<int>(state.range(0));
  const mppi::ControlSeq nominal(config.steps());
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto u = Fn(config, world, world.start, nominal, seed++);
    benchmark::DoNotOptimize(u.controls.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_conv_forward<k::serial::conv2d_forward>)->DenseRange(0, 2)->Name("conv_forward/serial");
BENCHMARK(BM_conv_forward<k::parallel::conv2d_forward>)->DenseRange(0, 2)->Name("conv_forward/parallel");
BENCHMARK(BM_conv_backward_input<k::serial::conv2d_backward_input>)->DenseRange(0, 2)->Name("conv_backward_input/serial");
BENCHMARK(BM_conv_backward_input<k::parallel::conv2d_backward_input>)
    ->DenseRange(0, 2)
    ->Name("conv_backward_input/parallel");
BENCHMARK(BM_conv_backward_weight<k::serial::conv2d_backward_weight>)
    ->DenseRange(0, 2)
    ->Name("conv_backward_weight/serial");
BENCHMARK(BM_conv_backward_weight<k::parallel::conv2d_backward_weight>)
    ->DenseRange(0, 2)
    ->Name("conv_backward_weight/parallel");
BENCHMARK(BM_mppi_update<mppi::serial::mppi_update>)->Arg(256)->Arg(1024)->Name("mppi_update/serial");
BENCHMARK(BM_mppi_update<mppi::parallel::mppi_update>)->Arg(256)->Arg(1024)->Name("mppi_update/parallel");

BENCHMARK_MAIN();
