#pragma once

#include <string>

#include "plin/depth_io.hpp"

namespace plin {

// Depth metrics over the jointly valid pixel set. rmse/mae are in
// millimeters, irmse/imae in 1/km.
struct MetricReport {
  double rmse = 0.0;
  double mae = 0.0;
  double irmse = 0.0;
  double imae = 0.0;
  int valid_count = 0;
};

// Requires equal shapes and a non-empty joint-valid set. Every jointly valid
// depth must be positive (the depth-map invariant); run drop_nonpositive on
// raw network output first.
MetricReport evaluate(const DepthMap& pred, const DepthMap& gt);

// Frame averaging baseline: both valid -> mean, one valid -> that value.
DepthMap traditional_interpolate(const DepthMap& d_prev,
                                 const DepthMap& d_next);

// "label,rmse_mm,mae_mm,irmse_1perkm,imae_1perkm,valid_count"
std::string metrics_csv_header();
std::string metrics_csv_line(const std::string& label, const MetricReport& r);
std::string metrics_table(const std::string& label, const MetricReport& r);

}  // namespace plin
