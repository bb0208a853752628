#include "plin/flow.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "plin/depth_io.hpp"
#include "plin/errors.hpp"
#include "plin/parallel.hpp"

namespace plin {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr double kInvalidThreshold = 1e9;
constexpr float kInvalidSentinel = 1e10f;

void check_flow_pair(const FlowField& a, const FlowField& b, const char* who) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument(std::string(who) + ": flow shapes differ");
}

}  // namespace

MidpointFlows midpoint_flows(const FlowField& fwd, const FlowField& bwd) {
  check_flow_pair(fwd, bwd, "midpoint_flows");
  apply_thread_cap();

  const int w = fwd.width(), h = fwd.height();
  MidpointFlows out{FlowField(w, h), FlowField(w, h)};

#pragma omp parallel for if (static_cast<std::size_t>(w) * h > 4096)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
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

FlowField halve_flow(const FlowField& f, int direction) {
  if (direction != 1 && direction != -1)
    throw std::invalid_argument("halve_flow: direction must be +1 or -1");

  const double s = 0.5 * direction;
  FlowField out(f.width(), f.height());
  out.mask = f.mask;
  for (std::size_t i = 0; i < f.grid.data.size(); ++i)
    out.grid.data[i] = s * f.grid.data[i];
  return out;
}

FlowConsistency flow_consistency(const FlowField& fwd, const FlowField& bwd) {
  check_flow_pair(fwd, bwd, "flow_consistency");

  FlowConsistency r;
  double sum = 0.0;
  for (int v = 0; v < fwd.height(); ++v) {
    for (int u = 0; u < fwd.width(); ++u) {
      if (!fwd.mask.get(u, v) || !bwd.mask.get(u, v)) continue;
      double eu = fwd.du(u, v) + bwd.du(u, v);
      double ev = fwd.dv(u, v) + bwd.dv(u, v);
      double mag = std::hypot(eu, ev);
      sum += mag;
      if (mag > r.max) r.max = mag;
      ++r.both_valid;
    }
  }
  if (r.both_valid > 0) r.mean = sum / r.both_valid;
  return r;
}

namespace {

void put_f32(std::vector<std::uint8_t>& out, float x) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
  out.push_back(static_cast<std::uint8_t>(bits & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t x) {
  put_f32(out, std::bit_cast<float>(static_cast<std::uint32_t>(x)));
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

std::int32_t get_i32(const std::uint8_t* p) {
  return std::bit_cast<std::int32_t>(get_f32(p));
}

}  // namespace

std::vector<std::uint8_t> encode_flo(const FlowField& f) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + static_cast<std::size_t>(f.width()) * f.height() * 8);
  put_f32(out, kFloMagic);
  put_i32(out, f.width());
  put_i32(out, f.height());
  for (int v = 0; v < f.height(); ++v) {
    for (int u = 0; u < f.width(); ++u) {
      if (f.mask.get(u, v)) {
        put_f32(out, static_cast<float>(f.du(u, v)));
        put_f32(out, static_cast<float>(f.dv(u, v)));
      } else {
        put_f32(out, kInvalidSentinel);
        put_f32(out, kInvalidSentinel);
      }
    }
  }
  return out;
}

FlowField decode_flo(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw DataError("decode_flo: truncated header");
  float magic = get_f32(bytes.data());
  if (magic != kFloMagic)
    throw DataError("decode_flo: bad magic number, not a .flo stream");
  std::int32_t w = get_i32(bytes.data() + 4);
  std::int32_t h = get_i32(bytes.data() + 8);
  if (w <= 0 || h <= 0) throw DataError("decode_flo: non-positive dimensions");

  std::size_t need = 12 + static_cast<std::size_t>(w) * h * 8;
  if (bytes.size() < need) throw DataError("decode_flo: truncated payload");

  FlowField f(w, h);
  const std::uint8_t* p = bytes.data() + 12;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u, p += 8) {
      float du = get_f32(p);
      float dv = get_f32(p + 4);
      if (!std::isfinite(du) || !std::isfinite(dv) ||
          std::abs(du) > kInvalidThreshold || std::abs(dv) > kInvalidThreshold)
        continue;
      f.grid.at(u, v, 0) = du;
      f.grid.at(u, v, 1) = dv;
      f.mask.set(u, v, true);
    }
  }
  return f;
}

FlowField read_flo(const std::string& path) {
  return decode_flo(read_file(path));
}

void write_flo(const std::string& path, const FlowField& f) {
  write_file(path, encode_flo(f));
}

}  // namespace plin
