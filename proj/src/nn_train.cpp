#include "plin/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "plin/errors.hpp"
#include "plin/flow.hpp"
#include "plin/nn/adam.hpp"
#include "plin/nn/loss.hpp"
#include "plin/rng.hpp"
#include "plin/warp.hpp"

namespace plin::nn {

namespace {

// Interleaved Grid2D -> planar CHW float tensor.
Tensor to_tensor(const Grid2D& g) {
  Tensor t(g.channels, g.height, g.width);
  for (int c = 0; c < g.channels; ++c)
    for (int v = 0; v < g.height; ++v)
      for (int u = 0; u < g.width; ++u)
        t.at(c, v, u) = static_cast<float>(g.at(u, v, c));
  return t;
}

Tensor depth_to_tensor(const DepthMap& d) {
  Tensor t(1, d.height(), d.width());
  for (int v = 0; v < d.height(); ++v)
    for (int u = 0; u < d.width(); ++u)
      t.at(0, v, u) =
          d.mask.get(u, v) ? static_cast<float>(d.grid.at(u, v)) : 0.0f;
  return t;
}

DepthMap tensor_to_depth(const Tensor& t) {
  DepthMap d(t.w, t.h, DepthKind::Dense);
  for (int v = 0; v < t.h; ++v) {
    for (int u = 0; u < t.w; ++u) {
      d.grid.at(u, v) = static_cast<double>(t.at(0, v, u));
      d.mask.set(u, v, true);
    }
  }
  drop_nonpositive(d);
  return d;
}

}  // namespace

TrainSample assemble_sample(const DepthMap& d_prev, const DepthMap& d_next,
                            const FlowField& cross_fwd,
                            const FlowField& cross_bwd,
                            const ColorImage& color, double gamma) {
  MidpointFlows mid = midpoint_flows(cross_fwd, cross_bwd);
  WarpedPair warped =
      make_warped_pair(d_prev, d_next, mid.to_prev, mid.to_next, gamma);
  Grid2D stack =
      assemble_motion_input(d_prev, d_next, mid.to_prev, mid.to_next, warped);

  TrainSample s;
  s.stack = to_tensor(stack);
  s.color = to_tensor(color.grid);
  s.gt = Tensor(1, s.stack.h, s.stack.w);
  s.gt_mask.assign(s.gt.size(), 0);
  return s;
}

TrainSample load_sample(const SampleRecord& rec, double gamma) {
  DepthMap d_prev = read_depth_png(rec.d_prev);
  DepthMap d_next = read_depth_png(rec.d_next);
  FlowField cross_fwd = read_flo(rec.flow_fwd);
  FlowField cross_bwd = read_flo(rec.flow_bwd);
  ColorImage color = read_color_png(rec.color_t);
  DepthMap gt = read_depth_png(rec.gt_dense);

  TrainSample s = assemble_sample(d_prev, d_next, cross_fwd, cross_bwd, color,
                                  gamma);
  s.gt = depth_to_tensor(gt);
  s.gt_mask.assign(gt.mask.bits.begin(), gt.mask.bits.end());
  return s;
}

TrainSample flip_horizontal(const TrainSample& s) {
  TrainSample f;
  f.stack = Tensor(s.stack.c, s.stack.h, s.stack.w);
  f.color = Tensor(s.color.c, s.color.h, s.color.w);
  f.gt = Tensor(s.gt.c, s.gt.h, s.gt.w);
  f.gt_mask.assign(s.gt_mask.size(), 0);

  const int w = s.stack.w;
  for (int c = 0; c < s.stack.c; ++c) {
    const float sign = (c == 1 || c == 5) ? -1.0f : 1.0f;  // du channels
    for (int y = 0; y < s.stack.h; ++y)
      for (int x = 0; x < w; ++x)
        f.stack.at(c, y, x) = sign * s.stack.at(c, y, w - 1 - x);
  }
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s.color.h; ++y)
      for (int x = 0; x < w; ++x)
        f.color.at(c, y, x) = s.color.at(c, y, w - 1 - x);
  for (int y = 0; y < s.gt.h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.gt.at(0, y, x) = s.gt.at(0, y, w - 1 - x);
      f.gt_mask[static_cast<std::size_t>(y) * w + x] =
          s.gt_mask[static_cast<std::size_t>(y) * w + (w - 1 - x)];
    }
  }
  return f;
}

TrainResult train_loop(const std::vector<TrainSample>& samples,
                       const TrainConfig& cfg) {
  if (samples.empty())
    throw std::invalid_argument("train_loop: empty dataset");
  if (cfg.epochs < 1)
    throw std::invalid_argument("train_loop: epochs must be >= 1");

  Rng rng(cfg.seed);
  TrainResult result{Cascade(cfg.coarse, cfg.refine), {}};
  result.net.init(rng);

  Adam opt;
  opt.lr0 = cfg.lr;
  opt.lr_step_epochs = cfg.lr_step_epochs;
  opt.lr_factor = cfg.lr_factor;
  auto params = result.net.params();

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = opt.lr_for_epoch(epoch);
    const bool frozen =
        cfg.freeze_bn_epochs > 0 && epoch >= cfg.epochs - cfg.freeze_bn_epochs;
    result.net.set_mode(true, !frozen, frozen);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) rng.shuffle(order);

    for (std::size_t idx : order) {
      const TrainSample* sp = &samples[idx];
      TrainSample flipped;
      if (cfg.flip && rng.bernoulli(0.5)) {
        flipped = flip_horizontal(*sp);
        sp = &flipped;
      }

      auto out = result.net.forward(sp->stack, sp->color);
      const double lc = masked_l2(out.d_coarse, sp->gt, sp->gt_mask);
      const double lf = masked_l2(out.d_refined, sp->gt, sp->gt_mask);
      const double total = cfg.w1 * lc + cfg.w2 * lf;
      ++step;
      if (!std::isfinite(total))
        throw NumericError("train_loop: non-finite loss at step " +
                           std::to_string(step));
      result.trace.push_back({step, epoch, lc, lf, total, lr});

      opt.zero_grad(params);
      Tensor g_coarse =
          masked_l2_grad(out.d_coarse, sp->gt, sp->gt_mask, cfg.w1);
      Tensor g_refined =
          masked_l2_grad(out.d_refined, sp->gt, sp->gt_mask, cfg.w2);
      result.net.backward(g_coarse, g_refined);
      opt.step(params, lr);
    }
  }
  return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "step,epoch,coarse_loss,refined_loss,total,lr\n";
  char line[256];
  for (const TraceRow& r : trace) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g,%.9g\n", r.step,
                  r.epoch, r.coarse_loss, r.refined_loss, r.total, r.lr);
    out << line;
  }
  return out.str();
}

Prediction predict(Cascade& net, const TrainSample& s) {
  net.set_mode(false, false);
  auto out = net.forward(s.stack, s.color);
  return {tensor_to_depth(out.d_coarse), tensor_to_depth(out.d_refined)};
}

}  // namespace plin::nn
