#include "plin/ref.hpp"

#include <stdexcept>

namespace plin::ref {

DepthMap backward_warp(const DepthMap& d, const FlowField& f) {
  if (d.width() != f.width() || d.height() != f.height())
    throw std::invalid_argument("ref::backward_warp: shapes differ");

  DepthMap out(d.width(), d.height(), d.kind);
  for (int v = 0; v < d.height(); ++v) {
    for (int u = 0; u < d.width(); ++u) {
      if (!f.mask.get(u, v)) continue;
      SampleResult s =
          bilinear_sample(d.grid, d.mask, u + f.du(u, v), v + f.dv(u, v));
      if (!s.valid) continue;
      out.grid.at(u, v) = s.value;
      out.mask.set(u, v, true);
    }
  }
  return out;
}

MidpointFlows midpoint_flows(const FlowField& fwd, const FlowField& bwd) {
  if (fwd.width() != bwd.width() || fwd.height() != bwd.height())
    throw std::invalid_argument("ref::midpoint_flows: shapes differ");

  MidpointFlows out{FlowField(fwd.width(), fwd.height()),
                    FlowField(fwd.width(), fwd.height())};
  for (int v = 0; v < fwd.height(); ++v) {
    for (int u = 0; u < fwd.width(); ++u) {
      if (!fwd.mask.get(u, v) || !bwd.mask.get(u, v)) continue;
      for (int c = 0; c < 2; ++c) {
        double p = -0.25 * fwd.grid.at(u, v, c) + 0.25 * bwd.grid.at(u, v, c);
        out.to_prev.grid.at(u, v, c) = p;
        out.to_next.grid.at(u, v, c) = -p;
      }
      out.to_prev.mask.set(u, v, true);
      out.to_next.mask.set(u, v, true);
    }
  }
  return out;
}

double reduce_sum(const Grid2D& g) {
  // Same row-major partial-sum order as the parallel kernel.
  const std::size_t row_len = static_cast<std::size_t>(g.width) * g.channels;
  double total = 0.0;
  for (int v = 0; v < g.height; ++v) {
    double s = 0.0;
    const double* p = g.data.data() + static_cast<std::size_t>(v) * row_len;
    for (std::size_t i = 0; i < row_len; ++i) s += p[i];
    total += s;
  }
  return total;
}

nn::Tensor conv2d_forward(const nn::Tensor& x, const std::vector<float>& w,
                          const std::vector<float>& b, int in_c, int out_c,
                          int k, int stride, int pad) {
  if (x.c != in_c)
    throw std::invalid_argument("ref::conv2d_forward: channel mismatch");
  const int oh = (x.h + 2 * pad - k) / stride + 1;
  const int ow = (x.w + 2 * pad - k) / stride + 1;

  nn::Tensor y(out_c, oh, ow);
  for (int oc = 0; oc < out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = static_cast<double>(b[static_cast<std::size_t>(oc)]);
        for (int ic = 0; ic < in_c; ++ic) {
          for (int kh = 0; kh < k; ++kh) {
            const int iy = oy * stride - pad + kh;
            if (iy < 0 || iy >= x.h) continue;
            for (int kw = 0; kw < k; ++kw) {
              const int ix = ox * stride - pad + kw;
              if (ix < 0 || ix >= x.w) continue;
              acc += static_cast<double>(
                         w[((static_cast<std::size_t>(oc) * in_c + ic) * k +
                            kh) *
                               k +
                           kw]) *
                     static_cast<double>(x.at(ic, iy, ix));
            }
          }
        }
        y.at(oc, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return y;
}

}  // namespace plin::ref
