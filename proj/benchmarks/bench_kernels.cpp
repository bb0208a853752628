// Serial reference vs OpenMP kernels. Run with --benchmark_time_unit=ms for
// friendlier numbers; PLIN_THREADS caps the parallel side.

#include <benchmark/benchmark.h>

#include "plin/nn/layers.hpp"
#include "plin/ref.hpp"
#include "plin/rng.hpp"
#include "plin/warp.hpp"

using namespace plin;

namespace {

// One shared fixture; construction cost stays out of the timed loops.
struct Fixture {
  DepthMap depth{640, 480};
  FlowField fwd{640, 480};
  FlowField bwd{640, 480};
  Grid2D grid{2048, 1024, 1};
  nn::Tensor x{16, 128, 160};
  nn::Conv2dT<float> conv{16, 32, 3, 1, 1, "bench"};

  Fixture() {
    Rng rng(4242);
    for (int v = 0; v < depth.height(); ++v)
      for (int u = 0; u < depth.width(); ++u) {
        if (rng.uniform() < 0.5) {
          depth.grid.at(u, v) = rng.uniform(0.1, 90.0);
          depth.mask.set(u, v, true);
        }
        if (rng.uniform() < 0.9) {
          fwd.grid.at(u, v, 0) = rng.uniform(-8.0, 8.0);
          fwd.grid.at(u, v, 1) = rng.uniform(-8.0, 8.0);
          fwd.mask.set(u, v, true);
        }
        if (rng.uniform() < 0.9) {
          bwd.grid.at(u, v, 0) = rng.uniform(-8.0, 8.0);
          bwd.grid.at(u, v, 1) = rng.uniform(-8.0, 8.0);
          bwd.mask.set(u, v, true);
        }
      }
    for (auto& v : grid.data) v = rng.uniform(-1.0, 1.0);
    for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    conv.init(rng);
  }
};

Fixture& fx() {
  static Fixture f;
  return f;
}

void BM_warp_serial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ref::backward_warp(fx().depth, fx().fwd));
}

void BM_warp_parallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(backward_warp(fx().depth, fx().fwd));
}

void BM_midpoint_serial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(ref::midpoint_flows(fx().fwd, fx().bwd));
}

void BM_midpoint_parallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(midpoint_flows(fx().fwd, fx().bwd));
}

void BM_reduce_serial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ref::reduce_sum(fx().grid));
}

void BM_reduce_parallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reduce_sum(fx().grid));
}

void BM_conv2d_serial(benchmark::State& state) {
  auto& f = fx();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        ref::conv2d_forward(f.x, f.conv.w.v, f.conv.b.v, 16, 32, 3, 1, 1));
}

void BM_conv2d_parallel(benchmark::State& state) {
  auto& f = fx();
  for (auto _ : state) benchmark::DoNotOptimize(f.conv.forward(f.x));
}

BENCHMARK(BM_warp_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_warp_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_midpoint_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_midpoint_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reduce_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reduce_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
