#include "plin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "plin/errors.hpp"
#include "plin/rng.hpp"

namespace plin {

namespace {

namespace fs = std::filesystem;

double snap256(double x) { return std::round(x * 256.0) / 256.0; }
double snap255(double x) { return std::round(x * 255.0) / 255.0; }

double object_depth(const SceneObject& o, int frame) {
  return o.z + frame * o.vz;
}

// Winning object at pixel (u, v) of the given frame, -1 if none.
int hit_object(const SceneSpec& spec, int frame, int u, int v) {
  int best = -1;
  double best_z = 0.0;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const SceneObject& o = spec.objects[i];
    double z = object_depth(o, frame);
    double x = (u - spec.k.cu) * z / spec.k.fu;
    double y = (v - spec.k.cv) * z / spec.k.fv;
    double ox = o.cx + frame * o.vx;
    double oy = o.cy + frame * o.vy;
    if (std::abs(x - ox) > o.hx || std::abs(y - oy) > o.hy) continue;
    if (best < 0 || z < best_z) {
      best = static_cast<int>(i);
      best_z = z;
    }
  }
  return best;
}

}  // namespace

void validate_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1)
    throw std::invalid_argument("scene: image size must be positive");
  if (spec.objects.empty())
    throw std::invalid_argument("scene: needs at least one object");
  if (spec.scanline_period < 1)
    throw std::invalid_argument("scene: scanline period must be >= 1");
  check_intrinsics(spec.k);
  for (const SceneObject& o : spec.objects) {
    for (int f = -1; f <= 1; ++f) {
      double z = object_depth(o, f);
      if (!(z > 0.0))
        throw std::invalid_argument(
            "scene: object depth must stay positive in every frame");
      if (z > kMaxCodecDepth)
        throw std::invalid_argument("scene: object depth beyond codec range");
    }
    if (!(o.hx > 0.0) || !(o.hy > 0.0))
      throw std::invalid_argument("scene: object extents must be positive");
  }
}

SceneSpec snap_to_codec_lattice(const SceneSpec& spec) {
  SceneSpec out = spec;
  for (SceneObject& o : out.objects) {
    o.z = snap256(o.z);
    o.vz = snap256(o.vz);
    for (double& a : o.albedo) a = snap255(std::clamp(a, 0.0, 1.0));
  }
  return out;
}

RenderedFrame render(const SceneSpec& spec, int frame) {
  if (frame < -1 || frame > 1)
    throw std::invalid_argument("render: frame must be -1, 0 or +1");
  validate_scene(spec);

  const int w = spec.width, h = spec.height;
  RenderedFrame out{DepthMap(w, h, DepthKind::Dense),
                    DepthMap(w, h, DepthKind::Sparse), ColorImage(w, h),
                    std::vector<int>(static_cast<std::size_t>(w) * h, -1)};

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      int i = hit_object(spec, frame, u, v);
      out.ids[static_cast<std::size_t>(v) * w + u] = i;
      if (i < 0) continue;
      const SceneObject& o = spec.objects[static_cast<std::size_t>(i)];
      double z = object_depth(o, frame);

      out.dense.grid.at(u, v) = z;
      out.dense.mask.set(u, v, true);
      if (v % spec.scanline_period == 0) {
        out.sparse.grid.at(u, v) = z;
        out.sparse.mask.set(u, v, true);
      }

      // Checker anchored to object-local world coordinates, so the texture
      // translates rigidly with the object.
      double shade = 1.0;
      if (o.checker > 0.0) {
        double x = (u - spec.k.cu) * z / spec.k.fu - (o.cx + frame * o.vx);
        double y = (v - spec.k.cv) * z / spec.k.fv - (o.cy + frame * o.vy);
        long long a = static_cast<long long>(std::floor(x / o.checker));
        long long b = static_cast<long long>(std::floor(y / o.checker));
        shade = ((a ^ b) & 1) ? 0.55 : 1.0;
      }
      if (o.kind == SceneObject::Kind::Box) shade *= 0.85;
      for (int c = 0; c < 3; ++c)
        out.color.grid.at(u, v, c) =
            snap255(std::clamp(o.albedo[c] * shade, 0.0, 1.0));
    }
  }
  return out;
}

namespace {

// Per-frame pixel displacement. Held as float (not double) so the values
// written to .flo files reload without loss; keeping the narrowing in the
// type also stops the optimizer from fusing away a double->float->double
// round trip, which gcc 11's SLP pass is happy to do.
struct ObjectFlowBasis {
  bool constant = false;  // vz == 0: displacement independent of the pixel
  float kx = 0.0f, ky = 0.0f;
};

ObjectFlowBasis flow_basis(const SceneSpec& spec, const SceneObject& o) {
  ObjectFlowBasis b;
  if (o.vz == 0.0) {
    b.constant = true;
    b.kx = static_cast<float>(o.vx * spec.k.fu / o.z);
    b.ky = static_cast<float>(o.vy * spec.k.fv / o.z);
  }
  return b;
}

// Displacement of the world point seen at (u, v) in frame a, moved to frame
// b. Only used when vz != 0; otherwise the constant basis applies.
void general_flow(const SceneSpec& spec, const SceneObject& o, int a, int b,
                  int u, int v, float& du, float& dv) {
  double za = object_depth(o, a);
  double zb = object_depth(o, b);
  double x = (u - spec.k.cu) * za / spec.k.fu + (b - a) * o.vx;
  double y = (v - spec.k.cv) * za / spec.k.fv + (b - a) * o.vy;
  du = static_cast<float>(x * spec.k.fu / zb + spec.k.cu - u);
  dv = static_cast<float>(y * spec.k.fv / zb + spec.k.cv - v);
}

// Flow anchored at frame a pointing to frame b, masked per mode.
FlowField flow_between(const SceneSpec& spec,
                       const std::vector<ObjectFlowBasis>& basis,
                       const RenderedFrame& fa, const RenderedFrame& fb,
                       int a, int b, FlowMaskMode mode) {
  const int w = spec.width, h = spec.height;
  FlowField f(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      int i = fa.id_at(u, v);
      if (i < 0) {
        // Estimator-style dense fields report no motion where the scene is
        // empty; the occlusion-checked oracle abstains instead.
        if (mode == FlowMaskMode::Dense) f.mask.set(u, v, true);
        continue;
      }
      const SceneObject& o = spec.objects[static_cast<std::size_t>(i)];
      float du, dv;
      if (basis[static_cast<std::size_t>(i)].constant) {
        // (b - a) is +-1 or +-2, so the products stay exact in float.
        du = static_cast<float>(b - a) * basis[static_cast<std::size_t>(i)].kx;
        dv = static_cast<float>(b - a) * basis[static_cast<std::size_t>(i)].ky;
      } else {
        general_flow(spec, o, a, b, u, v, du, dv);
      }

      if (mode == FlowMaskMode::OcclusionChecked) {
        double lu = u + static_cast<double>(du);
        double lv = v + static_cast<double>(dv);
        if (!(lu >= 0.0 && lu <= w - 1 && lv >= 0.0 && lv <= h - 1)) continue;
        int u0 = static_cast<int>(std::floor(lu));
        int v0 = static_cast<int>(std::floor(lv));
        int u1 = std::min(u0 + 1, w - 1);
        int v1 = std::min(v0 + 1, h - 1);
        if (fb.id_at(u0, v0) != i || fb.id_at(u1, v0) != i ||
            fb.id_at(u0, v1) != i || fb.id_at(u1, v1) != i)
          continue;
      }

      f.grid.at(u, v, 0) = du;
      f.grid.at(u, v, 1) = dv;
      f.mask.set(u, v, true);
    }
  }
  return f;
}

}  // namespace

ExactFlows exact_flows(const SceneSpec& spec, FlowMaskMode mode) {
  validate_scene(spec);

  std::vector<ObjectFlowBasis> basis;
  basis.reserve(spec.objects.size());
  for (const SceneObject& o : spec.objects)
    basis.push_back(flow_basis(spec, o));

  RenderedFrame prev = render(spec, -1);
  RenderedFrame mid = render(spec, 0);
  RenderedFrame next = render(spec, +1);

  return ExactFlows{
      flow_between(spec, basis, prev, next, -1, +1, mode),
      flow_between(spec, basis, next, prev, +1, -1, mode),
      flow_between(spec, basis, mid, prev, 0, -1, mode),
      flow_between(spec, basis, mid, next, 0, +1, mode),
  };
}

std::string generate_dataset(const std::vector<SceneSpec>& specs,
                             const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ostringstream manifest;

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const SceneSpec spec = snap_to_codec_lattice(specs[s]);
    validate_scene(spec);

    char name[32];
    std::snprintf(name, sizeof name, "sample_%04zu", s);
    fs::create_directories(fs::path(out_dir) / name);

    RenderedFrame prev = render(spec, -1);
    RenderedFrame mid = render(spec, 0);
    RenderedFrame next = render(spec, +1);
    ExactFlows flows = exact_flows(spec, FlowMaskMode::Dense);

    auto rel = [&](const char* file) {
      return (fs::path(name) / file).string();
    };
    auto abs = [&](const char* file) {
      return (fs::path(out_dir) / name / file).string();
    };

    write_depth_png(abs("d_prev.png"), prev.sparse);
    write_depth_png(abs("d_next.png"), next.sparse);
    write_flo(abs("flow_fwd.flo"), flows.cross_fwd);
    write_flo(abs("flow_bwd.flo"), flows.cross_bwd);
    write_color_png(abs("color_t.png"), mid.color);
    write_depth_png(abs("gt_dense.png"), mid.dense);

    manifest << rel("d_prev.png") << ' ' << rel("d_next.png") << ' '
             << rel("flow_fwd.flo") << ' ' << rel("flow_bwd.flo") << ' '
             << rel("color_t.png") << ' ' << rel("gt_dense.png") << '\n';
  }

  if (!specs.empty())
    write_intrinsics((fs::path(out_dir) / "intrinsics.txt").string(),
                     specs.front().k);

  std::string manifest_path = (fs::path(out_dir) / "manifest.txt").string();
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw DataError("generate_dataset: cannot write " + manifest_path);
  mf << manifest.str();
  return manifest_path;
}

std::vector<SampleRecord> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_manifest: cannot open " + path);
  fs::path base = fs::path(path).parent_path();

  std::vector<SampleRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    SampleRecord r;
    if (!(ss >> r.d_prev >> r.d_next >> r.flow_fwd >> r.flow_bwd >>
          r.color_t >> r.gt_dense))
      throw DataError("read_manifest: line " + std::to_string(lineno) +
                      " needs six paths");
    auto resolve = [&](std::string& p) {
      if (!fs::path(p).is_absolute()) p = (base / p).string();
    };
    resolve(r.d_prev);
    resolve(r.d_next);
    resolve(r.flow_fwd);
    resolve(r.flow_bwd);
    resolve(r.color_t);
    resolve(r.gt_dense);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SceneSpec> make_random_scenes(int count, std::uint64_t seed,
                                          int width, int height) {
  if (count < 0) throw std::invalid_argument("make_random_scenes: count < 0");
  Rng rng(seed);

  std::vector<SceneSpec> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    spec.k = CameraIntrinsics{60.0, 60.0, (width - 1) / 2.0,
                              (height - 1) / 2.0};
    spec.scanline_period = 4;

    // Static background wall spanning the whole view.
    SceneObject bg;
    bg.kind = SceneObject::Kind::Rect;
    bg.cx = 0.0;
    bg.cy = 0.0;
    bg.z = rng.uniform(0.45, 0.6);
    bg.hx = bg.hy = 2.0;
    bg.checker = rng.uniform(0.05, 0.12);
    for (double& a : bg.albedo) a = rng.uniform(0.35, 0.75);
    spec.objects.push_back(bg);

    int boxes = rng.uniform_int(2, 3);
    for (int b = 0; b < boxes; ++b) {
      SceneObject o;
      o.kind = SceneObject::Kind::Box;
      o.z = rng.uniform(0.22, 0.38);
      double view_hx = (width / 2.0) * o.z / spec.k.fu;
      double view_hy = (height / 2.0) * o.z / spec.k.fv;
      o.cx = rng.uniform(-0.6 * view_hx, 0.6 * view_hx);
      o.cy = rng.uniform(-0.6 * view_hy, 0.6 * view_hy);
      o.hx = rng.uniform(0.025, 0.05);
      o.hy = rng.uniform(0.025, 0.05);
      // Mostly lateral motion, strong enough that the cross-frame
      // displacement rivals the box size.
      double speed = rng.uniform(0.03, 0.055);
      o.vx = rng.bernoulli(0.5) ? speed : -speed;
      o.vy = rng.uniform(-0.012, 0.012);
      o.vz = 0.0;
      o.checker = rng.uniform(0.015, 0.04);
      for (double& a : o.albedo) a = rng.uniform(0.25, 0.95);
      spec.objects.push_back(o);
    }
    scenes.push_back(snap_to_codec_lattice(spec));
  }
  return scenes;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_number(const std::string& val, const std::string& key) {
  try {
    std::size_t used = 0;
    double x = std::stod(val, &used);
    if (used != val.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw DataError("scene spec: bad number for '" + key + "': " + val);
  }
}

}  // namespace

SynthJob parse_scene_spec(const std::string& text) {
  SynthJob job;
  job.scene.objects.clear();

  enum class Section { None, Scene, Object, Dataset } section = Section::None;
  SceneObject current;
  bool have_object = false;
  auto flush_object = [&] {
    if (have_object) job.scene.objects.push_back(current);
    have_object = false;
  };

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line == "[scene]") {
      flush_object();
      section = Section::Scene;
      continue;
    }
    if (line == "[[object]]") {
      flush_object();
      current = SceneObject{};
      have_object = true;
      section = Section::Object;
      continue;
    }
    if (line == "[dataset]") {
      flush_object();
      section = Section::Dataset;
      continue;
    }
    if (line.front() == '[')
      throw DataError("scene spec: unknown section " + line);

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("scene spec: expected key=value, got: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));

    switch (section) {
      case Section::Scene: {
        if (key == "width") job.scene.width = static_cast<int>(to_number(val, key));
        else if (key == "height") job.scene.height = static_cast<int>(to_number(val, key));
        else if (key == "fu") job.scene.k.fu = to_number(val, key);
        else if (key == "fv") job.scene.k.fv = to_number(val, key);
        else if (key == "cu") job.scene.k.cu = to_number(val, key);
        else if (key == "cv") job.scene.k.cv = to_number(val, key);
        else if (key == "scanline") job.scene.scanline_period = static_cast<int>(to_number(val, key));
        else throw DataError("scene spec: unknown scene key " + key);
        break;
      }
      case Section::Object: {
        if (key == "kind") {
          if (val == "rect") current.kind = SceneObject::Kind::Rect;
          else if (val == "box") current.kind = SceneObject::Kind::Box;
          else throw DataError("scene spec: unknown object kind " + val);
        } else if (key == "cx") current.cx = to_number(val, key);
        else if (key == "cy") current.cy = to_number(val, key);
        else if (key == "z") current.z = to_number(val, key);
        else if (key == "hx") current.hx = to_number(val, key);
        else if (key == "hy") current.hy = to_number(val, key);
        else if (key == "vx") current.vx = to_number(val, key);
        else if (key == "vy") current.vy = to_number(val, key);
        else if (key == "vz") current.vz = to_number(val, key);
        else if (key == "checker") current.checker = to_number(val, key);
        else if (key == "albedo") {
          std::istringstream cs(val);
          if (!(cs >> current.albedo[0] >> current.albedo[1] >>
                current.albedo[2]))
            throw DataError("scene spec: albedo needs three numbers");
        } else {
          throw DataError("scene spec: unknown object key " + key);
        }
        break;
      }
      case Section::Dataset: {
        if (key == "count") job.count = static_cast<int>(to_number(val, key));
        else if (key == "seed") job.seed = static_cast<std::uint64_t>(to_number(val, key));
        else if (key == "mode") {
          if (val == "random") job.random_mode = true;
          else if (val == "explicit") job.random_mode = false;
          else throw DataError("scene spec: unknown dataset mode " + val);
        } else {
          throw DataError("scene spec: unknown dataset key " + key);
        }
        break;
      }
      case Section::None:
        throw DataError("scene spec: key=value before any section: " + line);
    }
  }
  flush_object();

  if (job.count < 0) throw DataError("scene spec: count must be >= 0");
  if (!job.random_mode && job.scene.objects.empty())
    throw DataError("scene spec: explicit mode needs [[object]] blocks");
  return job;
}

std::vector<SceneSpec> scenes_for_job(const SynthJob& job) {
  if (job.random_mode)
    return make_random_scenes(job.count, job.seed, job.scene.width,
                              job.scene.height);
  std::vector<SceneSpec> scenes;
  SceneSpec snapped = snap_to_codec_lattice(job.scene);
  for (int i = 0; i < job.count; ++i) scenes.push_back(snapped);
  return scenes;
}

}  // namespace plin
