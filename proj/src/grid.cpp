#include "plin/grid.hpp"

#include <cmath>

namespace plin {

SampleResult bilinear_sample(const Grid2D& g, const ValidityMask& m, double u,
                             double v) {
  if (!m.matches(g))
    throw std::invalid_argument("bilinear_sample: grid/mask shape mismatch");
  if (g.channels != 1)
    throw std::invalid_argument("bilinear_sample: single-channel grids only");

  const int w = g.width, h = g.height;
  if (!(u >= 0.0 && u <= w - 1 && v >= 0.0 && v <= h - 1)) return {};

  const int u0 = static_cast<int>(std::floor(u));
  const int v0 = static_cast<int>(std::floor(v));
  const double fu = u - u0;
  const double fv = v - v0;
  const int u1 = u0 + 1 < w ? u0 + 1 : u0;  // fu == 0 when clamped
  const int v1 = v0 + 1 < h ? v0 + 1 : v0;

  const int nu[4] = {u0, u1, u0, u1};
  const int nv[4] = {v0, v0, v1, v1};
  const double nw[4] = {(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv),
                        (1.0 - fu) * fv, fu * fv};

  double weight = 0.0, acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (nw[i] == 0.0 || !m.get(nu[i], nv[i])) continue;
    weight += nw[i];
    acc += nw[i] * g.at(nu[i], nv[i]);
  }
  if (weight <= 0.0) return {};
  return {acc / weight, true};
}

double reduce_sum(const Grid2D& g) {
  const int h = g.height;
  const std::size_t row_len =
      static_cast<std::size_t>(g.width) * g.channels;
  std::vector<double> partial(h, 0.0);
#ifdef _OPENMP
#pragma omp parallel for if (g.size() > 16384)
#endif
  for (int v = 0; v < h; ++v) {
    double s = 0.0;
    const double* p = g.data.data() + static_cast<std::size_t>(v) * row_len;
    for (std::size_t i = 0; i < row_len; ++i) s += p[i];
    partial[v] = s;
  }
  double total = 0.0;
  for (int v = 0; v < h; ++v) total += partial[v];
  return total;
}

}  // namespace plin
