#include "plin/pseudo_lidar.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "plin/errors.hpp"

namespace plin {

void check_intrinsics(const CameraIntrinsics& k) {
  if (!(k.fu > 0.0) || !(k.fv > 0.0))
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
}

PointCloud back_project(const DepthMap& d, const CameraIntrinsics& k) {
  check_intrinsics(k);

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(d.mask.count()));
  for (int v = 0; v < d.height(); ++v) {
    for (int u = 0; u < d.width(); ++u) {
      if (!d.mask.get(u, v)) continue;
      double z = d.grid.at(u, v);
      cloud.points.push_back(
          {(u - k.cu) * z / k.fu, (v - k.cv) * z / k.fv, z});
    }
  }
  return cloud;
}

DepthMap project(const PointCloud& p, const CameraIntrinsics& k, int w,
                 int h) {
  check_intrinsics(k);

  DepthMap out(w, h, DepthKind::Sparse);
  for (const Point3& pt : p.points) {
    if (!(pt.z > 0.0)) continue;
    long u = std::lround(pt.x * k.fu / pt.z + k.cu);
    long v = std::lround(pt.y * k.fv / pt.z + k.cv);
    if (u < 0 || u >= w || v < 0 || v >= h) continue;
    int ui = static_cast<int>(u), vi = static_cast<int>(v);
    if (out.mask.get(ui, vi) && out.grid.at(ui, vi) <= pt.z) continue;
    out.grid.at(ui, vi) = pt.z;
    out.mask.set(ui, vi, true);
  }
  return out;
}

std::string write_ply(const PointCloud& p) {
  std::string out;
  out += "ply\n";
  out += "format ascii 1.0\n";
  out += "element vertex " + std::to_string(p.points.size()) + "\n";
  out += "property float x\n";
  out += "property float y\n";
  out += "property float z\n";
  out += "end_header\n";

  char line[128];
  for (const Point3& pt : p.points) {
    std::snprintf(line, sizeof line, "%.6g %.6g %.6g\n", pt.x, pt.y, pt.z);
    out += line;
  }
  return out;
}

void write_ply_file(const std::string& path, const PointCloud& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_ply: cannot open " + path);
  std::string text = write_ply(p);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("write_ply: short write to " + path);
}

CameraIntrinsics parse_intrinsics(const std::string& text) {
  double fu = std::numeric_limits<double>::quiet_NaN();
  double fv = fu, cu = fu, cv = fu;

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;

    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) continue;

    double x;
    try {
      std::size_t used = 0;
      x = std::stod(val, &used);
      if (used != val.size()) continue;
    } catch (const std::exception&) {
      throw DataError("intrinsics: bad number for key '" + key + "'");
    }

    if (key == "fu") fu = x;
    else if (key == "fv") fv = x;
    else if (key == "cu") cu = x;
    else if (key == "cv") cv = x;
    // unknown keys ignored
  }

  if (std::isnan(fu) || std::isnan(fv) || std::isnan(cu) || std::isnan(cv))
    throw DataError("intrinsics: missing one of fu, fv, cu, cv");

  CameraIntrinsics k{fu, fv, cu, cv};
  if (!(k.fu > 0.0) || !(k.fv > 0.0))
    throw DataError("intrinsics: focal lengths must be positive");
  return k;
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_intrinsics: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_intrinsics(ss.str());
}

std::string format_intrinsics(const CameraIntrinsics& k) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "fu=%.10g\nfv=%.10g\ncu=%.10g\ncv=%.10g\n",
                k.fu, k.fv, k.cu, k.cv);
  return buf;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& k) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_intrinsics: cannot open " + path);
  f << format_intrinsics(k);
  if (!f) throw DataError("write_intrinsics: short write to " + path);
}

}  // namespace plin
