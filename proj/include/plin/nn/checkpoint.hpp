#pragma once

#include <string>

#include "plin/nn/net.hpp"

namespace plin::nn {

// Versioned binary checkpoint: 8-byte magic "PLINCK01", little-endian u32
// entry count, then entries of (u16 name length, name, u32 float count,
// float32 payload). Entries hold the network configs, every parameter, and
// the batch-norm running buffers, addressed by layer name. gamma is the
// warp-fusion weight the checkpoint was trained with, replayed at inference.
void save_checkpoint(const std::string& path, Cascade& net, double gamma);

struct LoadedCheckpoint {
  Cascade net;
  double gamma = 0.5;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace plin::nn
