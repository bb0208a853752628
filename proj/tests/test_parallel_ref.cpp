#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "plin/nn/net.hpp"
#include "plin/parallel.hpp"
#include "plin/ref.hpp"
#include "plin/rng.hpp"
#include "plin/warp.hpp"

using namespace plin;

namespace {

struct Fixture {
  DepthMap depth{96, 64};
  FlowField fwd{96, 64};
  FlowField bwd{96, 64};
  Grid2D grid{257, 131, 2};

  Fixture() {
    Rng rng(1357);
    for (int v = 0; v < 64; ++v)
      for (int u = 0; u < 96; ++u) {
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
    for (auto& x : grid.data) x = rng.uniform(-1.0, 1.0);
  }
};

template <class F>
void for_thread_counts(F f) {
  // worker_count() consumes the one-shot cap first so omp_set_num_threads
  // below is not overridden later.
  int max_threads = worker_count();
#ifdef _OPENMP
  for (int n : {1, 2, 4}) {
    omp_set_num_threads(std::min(n, max_threads));
    f(n);
  }
  omp_set_num_threads(max_threads);
#else
  (void)max_threads;
  f(1);
#endif
}

}  // namespace

TEST_CASE("backward_warp matches the serial reference at any thread count") {
  Fixture fx;
  DepthMap want = ref::backward_warp(fx.depth, fx.fwd);
  for_thread_counts([&](int) {
    DepthMap got = backward_warp(fx.depth, fx.fwd);
    CHECK(got.grid.data == want.grid.data);
    CHECK(got.mask == want.mask);
  });
}

TEST_CASE("midpoint_flows matches the serial reference at any thread count") {
  Fixture fx;
  MidpointFlows want = ref::midpoint_flows(fx.fwd, fx.bwd);
  for_thread_counts([&](int) {
    MidpointFlows got = midpoint_flows(fx.fwd, fx.bwd);
    CHECK(got.to_prev.grid.data == want.to_prev.grid.data);
    CHECK(got.to_next.grid.data == want.to_next.grid.data);
    CHECK(got.to_prev.mask == want.to_prev.mask);
  });
}

TEST_CASE("reduce_sum matches the serial reference at any thread count") {
  Fixture fx;
  double want = ref::reduce_sum(fx.grid);
  for_thread_counts([&](int) {
    CHECK(reduce_sum(fx.grid) == want);
  });
}

TEST_CASE("conv2d forward matches the serial reference at any thread count") {
  Rng rng(2468);
  nn::Tensor x(3, 40, 56);
  for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  nn::Conv2dT<float> conv(3, 8, 3, 2, 1, "t");
  conv.init(rng);
  std::vector<float> w = conv.w.v;
  std::vector<float> b = conv.b.v;

  nn::Tensor want = ref::conv2d_forward(x, w, b, 3, 8, 3, 2, 1);
  for_thread_counts([&](int) {
    nn::Tensor got = conv.forward(x);
    CHECK(got.v == want.v);
  });
}

TEST_CASE("network forward is bit-reproducible across thread counts") {
  Rng rng(99);
  nn::CoarseNetConfig cc;
  cc.stem_kernels = 2;
  cc.stage_widths = {4, 4, 4, 4};
  cc.blocks_per_stage = 1;
  cc.dec_widths = {4, 4, 4, 4, 4};
  nn::CoarseNetT<float> net(cc);
  net.init(rng);
  net.set_mode(false, false);

  nn::Tensor x(8, 64, 64);
  for (auto& v : x.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  nn::Tensor want;
  bool first = true;
  for_thread_counts([&](int) {
    nn::Tensor got = net.forward(x);
    if (first) {
      want = got;
      first = false;
    } else {
      CHECK(got.v == want.v);
    }
  });
}

TEST_CASE("PLIN_THREADS cap reporting stays positive") {
  CHECK(worker_count() >= 1);
}
