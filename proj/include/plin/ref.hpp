#pragma once

#include "plin/depth_io.hpp"
#include "plin/eval.hpp"
#include "plin/flow.hpp"
#include "plin/nn/tensor.hpp"

// Single-threaded reference implementations of the OpenMP kernels. Kept
// deliberately plain: tests assert the parallel versions match these bit for
// bit at any thread count, and the benchmark target compares their speed.
namespace plin::ref {

DepthMap backward_warp(const DepthMap& d, const FlowField& f);

MidpointFlows midpoint_flows(const FlowField& fwd, const FlowField& bwd);

double reduce_sum(const Grid2D& g);

// Plain convolution matching Conv2dT<float>::forward.
nn::Tensor conv2d_forward(const nn::Tensor& x, const std::vector<float>& w,
                          const std::vector<float>& b, int in_c, int out_c,
                          int k, int stride, int pad);

}  // namespace plin::ref
