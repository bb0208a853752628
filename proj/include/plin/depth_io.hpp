#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plin/grid.hpp"

namespace plin {

enum class DepthKind { Sparse, Dense };

// Depth in meters, channels == 1. Valid pixels carry depth > 0; invalid
// pixels hold 0.0 in the data array and must never be read as depth.
struct DepthMap {
  Grid2D grid;
  ValidityMask mask;
  DepthKind kind = DepthKind::Sparse;

  DepthMap() = default;
  DepthMap(int w, int h, DepthKind k = DepthKind::Sparse)
      : grid(w, h, 1), mask(w, h, false), kind(k) {}

  int width() const { return grid.width; }
  int height() const { return grid.height; }
};

// RGB image, channels == 3, values in [0, 1].
struct ColorImage {
  Grid2D grid;

  ColorImage() = default;
  ColorImage(int w, int h) : grid(w, h, 3) {}

  int width() const { return grid.width; }
  int height() const { return grid.height; }
};

// 16-bit depth codec: stored = round(meters * 256), stored 0 = no
// measurement. Depths that would round to stored 0 are clamped up to the
// smallest encodable value so the validity mask survives a round trip.
constexpr double kDepthCodecScale = 256.0;
constexpr double kMaxCodecDepth = 65535.0 / kDepthCodecScale;  // 255.99609375 m

DepthMap decode_depth_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_depth_png(const DepthMap& d);

ColorImage decode_color_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_color_png(const ColorImage& c);

// Keeps the bottom target_h rows and the horizontally centered target_w
// columns (centering offset floor((W - target_w) / 2)).
DepthMap bottom_crop(const DepthMap& d, int target_w, int target_h);
ColorImage bottom_crop(const ColorImage& c, int target_w, int target_h);

// Marks non-positive valid pixels invalid. Network predictions pass through
// this before encoding or evaluation.
void drop_nonpositive(DepthMap& d);

// File helpers.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
DepthMap read_depth_png(const std::string& path);
void write_depth_png(const std::string& path, const DepthMap& d);
ColorImage read_color_png(const std::string& path);
void write_color_png(const std::string& path, const ColorImage& c);

}  // namespace plin
