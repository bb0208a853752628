#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace plin {

// Row-major 2D grid of 64-bit scalars. Pixel (u, v) = column u, row v;
// channels are interleaved per pixel. Geometry and metrics run on this type;
// network tensors use the 32-bit nn::TensorT instead.
struct Grid2D {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Grid2D() = default;

  Grid2D(int w, int h, int c = 1, double fill = 0.0) {
    if (w < 1 || h < 1 || c < 1)
      throw std::invalid_argument("Grid2D: dimensions must be >= 1");
    width = w;
    height = h;
    channels = c;
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  double& at(int u, int v, int c = 0) {
    return data[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }
  double at(int u, int v, int c = 0) const {
    return data[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Grid2D& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// One boolean per pixel, kept separate from the grid it annotates so that a
// legitimate value of 0 is never conflated with "no measurement".
struct ValidityMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  ValidityMask() = default;

  ValidityMask(int w, int h, bool fill = false) {
    if (w < 1 || h < 1)
      throw std::invalid_argument("ValidityMask: dimensions must be >= 1");
    width = w;
    height = h;
    bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
  }

  bool get(int u, int v) const {
    return bits[static_cast<std::size_t>(v) * width + u] != 0;
  }
  void set(int u, int v, bool valid) {
    bits[static_cast<std::size_t>(v) * width + u] = valid ? 1 : 0;
  }

  int count() const {
    int n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  bool matches(const Grid2D& g) const {
    return width == g.width && height == g.height;
  }
  bool operator==(const ValidityMask& o) const {
    return width == o.width && height == o.height && bits == o.bits;
  }
};

struct SampleResult {
  double value = 0.0;
  bool valid = false;
};

// Validity-weighted bilinear interpolation at real pixel coordinates (u, v).
// Pixel centers sit at integer coordinates; the valid domain is
// [0, W-1] x [0, H-1]. Weights of invalid neighbors are zeroed and the rest
// renormalized; the sample is invalid when no weight survives.
SampleResult bilinear_sample(const Grid2D& g, const ValidityMask& m, double u,
                             double v);

inline void check_same_shape(const Grid2D& a, const Grid2D& b,
                             const char* who) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

template <class F>
Grid2D map(const Grid2D& g, F f) {
  Grid2D out = g;
  for (auto& x : out.data) x = f(x);
  return out;
}

template <class F>
Grid2D zip(const Grid2D& a, const Grid2D& b, F f) {
  check_same_shape(a, b, "zip");
  Grid2D out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = f(a.data[i], b.data[i]);
  return out;
}

inline Grid2D add(const Grid2D& a, const Grid2D& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}

inline Grid2D scale(const Grid2D& g, double s) {
  return map(g, [s](double x) { return x * s; });
}

// Deterministic regardless of thread count: per-row partial sums are
// combined in row order.
double reduce_sum(const Grid2D& g);

}  // namespace plin
