#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "plin/depth_io.hpp"
#include "plin/nn/tensor.hpp"

namespace plin::nn {

// Mean squared error over the pixels the ground-truth mask marks valid.
// Predictions are dense network output, so only the gt mask gates the sum.
template <class T>
double masked_l2(const TensorT<T>& pred, const TensorT<T>& gt,
                 const std::vector<std::uint8_t>& gt_mask) {
  if (!pred.same_shape(gt) || pred.c != 1)
    throw std::invalid_argument("masked_l2: want matching 1-channel maps");
  if (gt_mask.size() != pred.size())
    throw std::invalid_argument("masked_l2: mask size mismatch");

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    if (!gt_mask[i]) continue;
    double d = static_cast<double>(pred.v[i]) - static_cast<double>(gt.v[i]);
    sum += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("masked_l2: empty valid set");
  return sum / static_cast<double>(n);
}

// dL/dpred for the loss above: 2*(pred-gt)/n on valid pixels, 0 elsewhere.
template <class T>
TensorT<T> masked_l2_grad(const TensorT<T>& pred, const TensorT<T>& gt,
                          const std::vector<std::uint8_t>& gt_mask,
                          double weight = 1.0) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt_mask.size(); ++i)
    if (gt_mask[i]) ++n;
  if (n == 0) throw std::invalid_argument("masked_l2_grad: empty valid set");

  TensorT<T> g(pred.c, pred.h, pred.w);
  const double s = 2.0 * weight / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    if (!gt_mask[i]) continue;
    g.v[i] = static_cast<T>(
        s * (static_cast<double>(pred.v[i]) - static_cast<double>(gt.v[i])));
  }
  return g;
}

// DepthMap-facing convenience: mask comes from gt, values from the grids.
double masked_l2(const DepthMap& pred, const DepthMap& gt);

// Weighted two-term objective over coarse and refined predictions.
double total_loss(const DepthMap& d_coarse, const DepthMap& d_refined,
                  const DepthMap& gt, double w1 = 0.1, double w2 = 1.0);

}  // namespace plin::nn
