#include "plin/warp.hpp"

#include <stdexcept>

#include "plin/parallel.hpp"

namespace plin {

namespace {

void check_spatial(int aw, int ah, int bw, int bh, const char* who) {
  if (aw != bw || ah != bh)
    throw std::invalid_argument(std::string(who) + ": shapes differ");
}

}  // namespace

DepthMap backward_warp(const DepthMap& d, const FlowField& f) {
  check_spatial(d.width(), d.height(), f.width(), f.height(), "backward_warp");
  apply_thread_cap();

  const int w = d.width(), h = d.height();
  DepthMap out(w, h, d.kind);

#pragma omp parallel for if (static_cast<std::size_t>(w) * h > 4096)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
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

DepthMap fuse(const DepthMap& from_prev, const DepthMap& from_next,
              double gamma) {
  check_spatial(from_prev.width(), from_prev.height(), from_next.width(),
                from_next.height(), "fuse");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("fuse: gamma must lie in [0,1]");

  const int w = from_prev.width(), h = from_prev.height();
  DepthKind kind = (from_prev.kind == DepthKind::Sparse ||
                    from_next.kind == DepthKind::Sparse)
                       ? DepthKind::Sparse
                       : DepthKind::Dense;
  DepthMap out(w, h, kind);

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      bool pv = from_prev.mask.get(u, v);
      bool nv = from_next.mask.get(u, v);
      if (!pv && !nv) continue;
      double val;
      if (pv && nv)
        val = gamma * from_prev.grid.at(u, v) +
              (1.0 - gamma) * from_next.grid.at(u, v);
      else
        val = pv ? from_prev.grid.at(u, v) : from_next.grid.at(u, v);
      out.grid.at(u, v) = val;
      out.mask.set(u, v, true);
    }
  }
  return out;
}

WarpedPair make_warped_pair(const DepthMap& d_prev, const DepthMap& d_next,
                            const FlowField& f_to_prev,
                            const FlowField& f_to_next, double gamma) {
  DepthMap wp = backward_warp(d_prev, f_to_prev);
  DepthMap wn = backward_warp(d_next, f_to_next);
  DepthMap fused = fuse(wp, wn, gamma);
  return WarpedPair{std::move(wp), std::move(wn), std::move(fused), gamma};
}

Grid2D assemble_motion_input(const DepthMap& d_prev, const DepthMap& d_next,
                             const FlowField& f_prev, const FlowField& f_next,
                             const WarpedPair& w) {
  const int W = d_prev.width(), H = d_prev.height();
  check_spatial(W, H, d_next.width(), d_next.height(),
                "assemble_motion_input");
  check_spatial(W, H, f_prev.width(), f_prev.height(),
                "assemble_motion_input");
  check_spatial(W, H, f_next.width(), f_next.height(),
                "assemble_motion_input");
  check_spatial(W, H, w.from_prev.width(), w.from_prev.height(),
                "assemble_motion_input");

  Grid2D stack(W, H, 8);
  auto depth_or_zero = [](const DepthMap& d, int u, int v) {
    return d.mask.get(u, v) ? d.grid.at(u, v) : 0.0;
  };
  auto flow_or_zero = [](const FlowField& f, int u, int v, int c) {
    return f.mask.get(u, v) ? f.grid.at(u, v, c) : 0.0;
  };

  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      stack.at(u, v, 0) = depth_or_zero(d_prev, u, v);
      stack.at(u, v, 1) = flow_or_zero(f_prev, u, v, 0);
      stack.at(u, v, 2) = flow_or_zero(f_prev, u, v, 1);
      stack.at(u, v, 3) = depth_or_zero(w.from_prev, u, v);
      stack.at(u, v, 4) = depth_or_zero(d_next, u, v);
      stack.at(u, v, 5) = flow_or_zero(f_next, u, v, 0);
      stack.at(u, v, 6) = flow_or_zero(f_next, u, v, 1);
      stack.at(u, v, 7) = depth_or_zero(w.from_next, u, v);
    }
  }
  return stack;
}

}  // namespace plin
