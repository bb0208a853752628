#include "plin/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <vector>

#include "plin/depth_io.hpp"
#include "plin/errors.hpp"

namespace plin::nn {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'I', 'N', 'C', 'K', '0', '1'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t x) {
  out.push_back(static_cast<std::uint8_t>(x & 0xff));
  out.push_back(static_cast<std::uint8_t>(x >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float x) {
  put_u32(out, std::bit_cast<std::uint32_t>(x));
}

struct Cursor {
  const std::uint8_t* p;
  std::size_t left;

  void need(std::size_t n) const {
    if (left < n) throw DataError("checkpoint: truncated file");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t x = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    p += 2;
    left -= 2;
    return x;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = static_cast<std::uint32_t>(p[0]) |
                      (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    p += 4;
    left -= 4;
    return x;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

void append_entry(std::vector<std::uint8_t>& out, const std::string& name,
                  const std::vector<float>& payload) {
  if (name.size() > 0xffff)
    throw std::invalid_argument("checkpoint: name too long");
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  for (float x : payload) put_f32(out, x);
}

std::vector<float> coarse_cfg_payload(const CoarseNetConfig& c) {
  std::vector<float> v{static_cast<float>(c.input_channels),
                       static_cast<float>(c.stem_kernels),
                       static_cast<float>(c.conv1_kernel),
                       static_cast<float>(c.blocks_per_stage),
                       static_cast<float>(c.head_init_scale)};
  for (int w : c.stage_widths) v.push_back(static_cast<float>(w));
  for (int w : c.dec_widths) v.push_back(static_cast<float>(w));
  return v;
}

std::vector<float> refine_cfg_payload(const RefineNetConfig& c) {
  std::vector<float> v{static_cast<float>(c.stem_kernels),
                       c.residual ? 1.0f : 0.0f,
                       static_cast<float>(c.head_init_scale)};
  for (int w : c.enc_widths) v.push_back(static_cast<float>(w));
  for (int w : c.dec_widths) v.push_back(static_cast<float>(w));
  return v;
}

CoarseNetConfig parse_coarse_cfg(const std::vector<float>& v) {
  if (v.size() != 14) throw DataError("checkpoint: bad coarse config");
  CoarseNetConfig c;
  c.input_channels = static_cast<int>(v[0]);
  c.stem_kernels = static_cast<int>(v[1]);
  c.conv1_kernel = static_cast<int>(v[2]);
  c.blocks_per_stage = static_cast<int>(v[3]);
  c.head_init_scale = v[4];
  for (int i = 0; i < 4; ++i) c.stage_widths[i] = static_cast<int>(v[5 + i]);
  for (int i = 0; i < 5; ++i) c.dec_widths[i] = static_cast<int>(v[9 + i]);
  return c;
}

RefineNetConfig parse_refine_cfg(const std::vector<float>& v) {
  if (v.size() != 11) throw DataError("checkpoint: bad refine config");
  RefineNetConfig c;
  c.stem_kernels = static_cast<int>(v[0]);
  c.residual = v[1] != 0.0f;
  c.head_init_scale = v[2];
  for (int i = 0; i < 5; ++i) c.enc_widths[i] = static_cast<int>(v[3 + i]);
  for (int i = 0; i < 3; ++i) c.dec_widths[i] = static_cast<int>(v[8 + i]);
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, Cascade& net, double gamma) {
  auto params = net.params();
  auto buffers = net.state_buffers();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u32(out, static_cast<std::uint32_t>(3 + params.size() + buffers.size()));

  append_entry(out, "cfg.coarse", coarse_cfg_payload(net.coarse.cfg));
  append_entry(out, "cfg.refine", refine_cfg_payload(net.refine.cfg));
  append_entry(out, "cfg.gamma", {static_cast<float>(gamma)});

  for (ParamT<float>* p : params) append_entry(out, p->name, p->v);
  for (auto& [name, buf] : buffers) append_entry(out, name, *buf);

  write_file(path, out);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic");

  Cursor cur{bytes.data() + 8, bytes.size() - 8};
  std::uint32_t count = cur.u32();

  std::map<std::string, std::vector<float>> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t name_len = cur.u16();
    std::string name = cur.str(name_len);
    std::uint32_t n = cur.u32();
    cur.need(static_cast<std::size_t>(n) * 4);
    std::vector<float> payload(n);
    for (std::uint32_t j = 0; j < n; ++j) payload[j] = cur.f32();
    if (!entries.emplace(std::move(name), std::move(payload)).second)
      throw DataError("checkpoint: duplicate entry");
  }

  auto take = [&](const std::string& name) -> std::vector<float> {
    auto it = entries.find(name);
    if (it == entries.end())
      throw DataError("checkpoint: missing entry " + name);
    std::vector<float> v = std::move(it->second);
    entries.erase(it);
    return v;
  };

  CoarseNetConfig cc = parse_coarse_cfg(take("cfg.coarse"));
  RefineNetConfig rc = parse_refine_cfg(take("cfg.refine"));
  std::vector<float> g = take("cfg.gamma");
  if (g.size() != 1) throw DataError("checkpoint: bad gamma entry");

  LoadedCheckpoint loaded{Cascade(cc, rc), g[0]};
  for (ParamT<float>* p : loaded.net.params()) {
    std::vector<float> v = take(p->name);
    if (v.size() != p->v.size())
      throw DataError("checkpoint: size mismatch for " + p->name);
    p->v = std::move(v);
  }
  for (auto& [name, buf] : loaded.net.state_buffers()) {
    std::vector<float> v = take(name);
    if (v.size() != buf->size())
      throw DataError("checkpoint: size mismatch for " + name);
    *buf = std::move(v);
  }
  return loaded;
}

}  // namespace plin::nn
