#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plin/depth_io.hpp"
#include "plin/nn/net.hpp"
#include "plin/synth.hpp"

namespace plin::nn {

// One training sample with the network inputs already assembled: the
// 8-channel motion stack, the middle-frame color, and dense ground truth
// with its validity mask.
struct TrainSample {
  Tensor stack;
  Tensor color;
  Tensor gt;
  std::vector<std::uint8_t> gt_mask;
};

// Runs the classical pipeline (midpoint flows from the cross pair, warps,
// fusion at the given gamma) and packs the result into tensors.
TrainSample load_sample(const SampleRecord& rec, double gamma);

// Same assembly from in-memory inputs, with an empty ground truth; enough
// for predict().
TrainSample assemble_sample(const DepthMap& d_prev, const DepthMap& d_next,
                            const FlowField& cross_fwd,
                            const FlowField& cross_bwd,
                            const ColorImage& color, double gamma);

// Mirrors all planes about the vertical axis and negates the horizontal flow
// channels (1 and 5) so the geometry stays consistent.
TrainSample flip_horizontal(const TrainSample& s);

struct TrainConfig {
  int epochs = 10;
  double lr = 1e-5;
  int lr_step_epochs = 5;
  double lr_factor = 0.1;
  double w1 = 0.1, w2 = 1.0;
  double gamma = 0.5;
  std::uint64_t seed = 0;
  bool shuffle = true;
  bool flip = true;
  // Final epochs trained against frozen running statistics instead of
  // per-sample batch statistics, so the weights adapt to the normalization
  // that inference will actually use. 0 disables the phase.
  int freeze_bn_epochs = 0;
  CoarseNetConfig coarse;
  RefineNetConfig refine;
};

struct TraceRow {
  int step = 0;
  int epoch = 0;
  double coarse_loss = 0.0;
  double refined_loss = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Cascade net;
  std::vector<TraceRow> trace;
};

// Batch-1 Adam over the samples, one update per sample, deterministic for a
// given seed. Throws NumericError the moment a loss stops being finite.
TrainResult train_loop(const std::vector<TrainSample>& samples,
                       const TrainConfig& cfg);

std::string trace_csv(const std::vector<TraceRow>& trace);

// Inference on an assembled sample; the refined prediction as a dense map
// with non-positive depths dropped. Runs the network in eval mode.
struct Prediction {
  DepthMap coarse;
  DepthMap refined;
};
Prediction predict(Cascade& net, const TrainSample& s);

}  // namespace plin::nn
