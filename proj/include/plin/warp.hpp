#pragma once

#include "plin/depth_io.hpp"
#include "plin/flow.hpp"
#include "plin/grid.hpp"

namespace plin {

// Warp each neighbour depth map to the middle frame plus their fusion.
struct WarpedPair {
  DepthMap from_prev;
  DepthMap from_next;
  DepthMap fused;
  double gamma = 0.5;
};

// Backward warp: out(u,v) = sample(d, u + du(u,v), v + dv(u,v)) with
// validity-weighted bilinear interpolation. The output pixel is invalid when
// the flow there is invalid or the sample lands out of range / on an
// all-invalid neighbourhood.
DepthMap backward_warp(const DepthMap& d, const FlowField& f);

// Convex fusion of the two warped maps: gamma*prev + (1-gamma)*next where
// both are valid; where only one is valid its value is taken unweighted;
// where neither is, the output is invalid.
DepthMap fuse(const DepthMap& from_prev, const DepthMap& from_next,
              double gamma);

WarpedPair make_warped_pair(const DepthMap& d_prev, const DepthMap& d_next,
                            const FlowField& f_to_prev,
                            const FlowField& f_to_next, double gamma);

// 8-channel network input stack, in this fixed order:
//   0 d_prev   1 f_prev.du   2 f_prev.dv   3 warp(d_prev)
//   4 d_next   5 f_next.du   6 f_next.dv   7 warp(d_next)
// Invalid pixels become plain zeros; the stack carries no mask.
Grid2D assemble_motion_input(const DepthMap& d_prev, const DepthMap& d_next,
                             const FlowField& f_prev, const FlowField& f_next,
                             const WarpedPair& w);

}  // namespace plin
