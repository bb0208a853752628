#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plin/grid.hpp"

namespace plin {

// Dense 2D optical flow. Channel 0 is the horizontal component (du),
// channel 1 the vertical one (dv). Invalid pixels carry zeros in the grid;
// the mask is authoritative.
struct FlowField {
  Grid2D grid;
  ValidityMask mask;

  FlowField(int w, int h) : grid(w, h, 2), mask(w, h, false) {}

  int width() const { return grid.width; }
  int height() const { return grid.height; }

  double du(int u, int v) const { return grid.at(u, v, 0); }
  double dv(int u, int v) const { return grid.at(u, v, 1); }
};

struct MidpointFlows {
  FlowField to_prev;  // frame t -> frame t-1
  FlowField to_next;  // frame t -> frame t+1
};

// Estimates the flows out of the (unobserved) middle frame from the
// bidirectional pair between its neighbours, assuming locally linear motion:
//   to_prev = -0.25 * fwd + 0.25 * bwd
//   to_next =  0.25 * fwd - 0.25 * bwd
// where fwd maps frame t-1 onto t+1 and bwd maps t+1 onto t-1.
// A pixel is valid only where both inputs are valid. The two outputs are
// exact negations of each other, bit for bit.
MidpointFlows midpoint_flows(const FlowField& fwd, const FlowField& bwd);

// Flow from one endpoint towards the middle: 0.5 * f for direction +1,
// -0.5 * f for direction -1. Any other direction is rejected.
FlowField halve_flow(const FlowField& f, int direction);

struct FlowConsistency {
  double mean = 0.0;
  double max = 0.0;
  int both_valid = 0;
};

// Diagnostic for how far a bidirectional pair deviates from the linear
// motion model: statistics of |fwd + bwd| over pixels valid in both fields.
// With exactly opposite flows both numbers are zero.
FlowConsistency flow_consistency(const FlowField& fwd, const FlowField& bwd);

// Middlebury .flo codec. Little-endian: float magic 202021.25, int32 width,
// int32 height, then height*width*(du,dv) float32 pairs in raster order.
// Components with magnitude above 1e9 mark invalid pixels; we write 1e10.
std::vector<std::uint8_t> encode_flo(const FlowField& f);
FlowField decode_flo(const std::vector<std::uint8_t>& bytes);

FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& f);

}  // namespace plin
