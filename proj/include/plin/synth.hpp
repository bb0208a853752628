#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plin/depth_io.hpp"
#include "plin/flow.hpp"
#include "plin/pseudo_lidar.hpp"

namespace plin {

// Fronto-parallel textured rectangle at constant depth, translating rigidly
// between frames. "Box" only changes the shading so scenes read as desks
// with objects; the geometry stays a constant-depth face, which keeps every
// flow and warp oracle analytic.
struct SceneObject {
  enum class Kind { Rect, Box };
  Kind kind = Kind::Rect;
  double cx = 0.0, cy = 0.0;  // world center at frame t, meters
  double hx = 0.1, hy = 0.1;  // half extents, meters
  double z = 0.5;             // depth at frame t, meters
  double vx = 0.0, vy = 0.0, vz = 0.0;  // translation per frame, meters
  double albedo[3] = {0.7, 0.7, 0.7};
  double checker = 0.05;  // checker cell size in meters, 0 = flat shading
};

struct SceneSpec {
  int width = 64, height = 64;
  CameraIntrinsics k{60.0, 60.0, 31.5, 31.5};
  int scanline_period = 4;  // sparse maps keep every k-th row
  std::vector<SceneObject> objects;
};

// Throws std::invalid_argument on non-positive depths (any frame), empty
// object list, or depths beyond the PNG codec ceiling.
void validate_scene(const SceneSpec& spec);

// Snaps depths to the 1/256 codec lattice, velocities' z to the same
// lattice, and albedos to the 8-bit lattice, so rendered samples survive the
// file codecs bit-exactly.
SceneSpec snap_to_codec_lattice(const SceneSpec& spec);

struct RenderedFrame {
  DepthMap dense;
  DepthMap sparse;
  ColorImage color;
  std::vector<int> ids;  // winning object index per pixel, -1 = background

  int id_at(int u, int v) const {
    return ids[static_cast<std::size_t>(v) * dense.width() + u];
  }
};

// frame in {-1, 0, +1} = {t-1, t, t+1}. Nearest object wins each pixel.
RenderedFrame render(const SceneSpec& spec, int frame);

enum class FlowMaskMode {
  Dense,             // every pixel valid, like an estimator's output
  OcclusionChecked,  // valid only where the landing cell shows the same object
};

struct ExactFlows {
  FlowField cross_fwd;    // t-1 -> t+1
  FlowField cross_bwd;    // t+1 -> t-1
  FlowField mid_to_prev;  // t -> t-1
  FlowField mid_to_next;  // t -> t+1
};

// Analytic flows from the objects' translations. For vz == 0 the per-object
// displacement is constant and the cross-frame fields are exactly twice the
// intermediate ones, so the midpoint combination reproduces mid_to_* bit for
// bit on pixels seeing one object in all frames. Components are rounded
// through float so .flo files reload bit-exactly.
ExactFlows exact_flows(const SceneSpec& spec, FlowMaskMode mode);

// One dataset sample on disk; paths are relative to the manifest.
struct SampleRecord {
  std::string d_prev, d_next, flow_fwd, flow_bwd, color_t, gt_dense;
};

// Writes per-sample directories (d_prev.png, d_next.png, flow_fwd.flo,
// flow_bwd.flo, color_t.png, gt_dense.png), a top-level intrinsics.txt from
// the first spec, and manifest.txt with one six-path line per sample.
// Dataset flows are written Dense (see FlowMaskMode) over the cross pair
// only; consumers derive the intermediate flows, as the real pipeline would.
// Returns the manifest path.
std::string generate_dataset(const std::vector<SceneSpec>& specs,
                             const std::string& out_dir);

std::vector<SampleRecord> read_manifest(const std::string& path);

// Desk-scale random scenes: a static background plane ~0.5 m away and a few
// laterally moving boxes in front, displacements comparable to box size so
// frame averaging visibly ghosts.
std::vector<SceneSpec> make_random_scenes(int count, std::uint64_t seed,
                                          int width = 64, int height = 64);

// INI-ish scene description: a [scene] section (width, height, fu, fv, cu,
// cv, scanline), [[object]] blocks (kind, cx, cy, z, hx, hy, vx, vy, vz,
// albedo r g b, checker), and an optional [dataset] section (count, seed,
// mode = random|explicit). mode=random ignores the object blocks and draws
// make_random_scenes(count, seed).
struct SynthJob {
  int count = 1;
  std::uint64_t seed = 0;
  bool random_mode = false;
  SceneSpec scene;
};

SynthJob parse_scene_spec(const std::string& text);
std::vector<SceneSpec> scenes_for_job(const SynthJob& job);

}  // namespace plin
