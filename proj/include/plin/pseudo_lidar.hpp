#pragma once

#include <string>
#include <vector>

#include "plin/depth_io.hpp"

namespace plin {

struct CameraIntrinsics {
  double fu = 0.0;  // focal lengths, pixels
  double fv = 0.0;
  double cu = 0.0;  // principal point, pixels
  double cv = 0.0;
};

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

// Camera-frame point cloud, z > 0 for every point.
struct PointCloud {
  std::vector<Point3> points;
  std::size_t count() const { return points.size(); }
};

void check_intrinsics(const CameraIntrinsics& k);

// One point per valid pixel, raster order:
//   z = d(u,v),  x = (u - cu) * z / fu,  y = (v - cv) * z / fv.
PointCloud back_project(const DepthMap& d, const CameraIntrinsics& k);

// Inverse pinhole projection: u = round(x*fu/z + cu), v = round(y*fv/z + cv).
// Points landing outside the image are dropped; collisions keep the nearest z.
DepthMap project(const PointCloud& p, const CameraIntrinsics& k, int w, int h);

// ASCII PLY, float32 x y z properties, 6 significant digits, order preserved.
std::string write_ply(const PointCloud& p);
void write_ply_file(const std::string& path, const PointCloud& p);

// Plain-text intrinsics: key=value lines for fu, fv, cu, cv. '#' starts a
// comment, blank lines and unknown keys are ignored, a repeated key wins.
CameraIntrinsics parse_intrinsics(const std::string& text);
CameraIntrinsics read_intrinsics(const std::string& path);
std::string format_intrinsics(const CameraIntrinsics& k);
void write_intrinsics(const std::string& path, const CameraIntrinsics& k);

}  // namespace plin
