#include "plin/eval.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "plin/errors.hpp"

namespace plin {

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("evaluate: shapes differ");

  // Deterministic accumulation in raster order.
  double se_mm = 0.0, ae_mm = 0.0;   // squared / absolute error, mm
  double se_km = 0.0, ae_km = 0.0;   // same for inverse depth, 1/km
  int n = 0;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!pred.mask.get(u, v) || !gt.mask.get(u, v)) continue;
      double p = pred.grid.at(u, v);
      double g = gt.grid.at(u, v);
      if (!(p > 0.0) || !(g > 0.0))
        throw NumericError("evaluate: non-positive depth at a valid pixel");

      double e_mm = (p - g) * 1000.0;
      se_mm += e_mm * e_mm;
      ae_mm += std::abs(e_mm);

      // 1/m -> 1/km is *1000.
      double e_km = (1.0 / p - 1.0 / g) * 1000.0;
      se_km += e_km * e_km;
      ae_km += std::abs(e_km);
      ++n;
    }
  }
  if (n == 0)
    throw std::invalid_argument("evaluate: no jointly valid pixels");

  MetricReport r;
  r.valid_count = n;
  r.rmse = std::sqrt(se_mm / n);
  r.mae = ae_mm / n;
  r.irmse = std::sqrt(se_km / n);
  r.imae = ae_km / n;
  return r;
}

DepthMap traditional_interpolate(const DepthMap& d_prev,
                                 const DepthMap& d_next) {
  if (d_prev.width() != d_next.width() || d_prev.height() != d_next.height())
    throw std::invalid_argument("traditional_interpolate: shapes differ");

  DepthMap out(d_prev.width(), d_prev.height(), d_prev.kind);
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      bool pv = d_prev.mask.get(u, v);
      bool nv = d_next.mask.get(u, v);
      if (!pv && !nv) continue;
      double val;
      if (pv && nv)
        val = 0.5 * (d_prev.grid.at(u, v) + d_next.grid.at(u, v));
      else
        val = pv ? d_prev.grid.at(u, v) : d_next.grid.at(u, v);
      out.grid.at(u, v) = val;
      out.mask.set(u, v, true);
    }
  }
  return out;
}

std::string metrics_csv_header() {
  return "label,rmse_mm,mae_mm,irmse_1perkm,imae_1perkm,valid_count";
}

std::string metrics_csv_line(const std::string& label, const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%d", label.c_str(),
                r.rmse, r.mae, r.irmse, r.imae, r.valid_count);
  return buf;
}

std::string metrics_table(const std::string& label, const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-14s rmse %12.3f mm   mae %12.3f mm   irmse %10.3f 1/km   "
                "imae %10.3f 1/km   (%d px)",
                label.c_str(), r.rmse, r.mae, r.irmse, r.imae, r.valid_count);
  return buf;
}

}  // namespace plin
