#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plin/nn/layers.hpp"

namespace plin::nn {

template <class T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shapes differ");
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

// conv/deconv + batch norm + ReLU, the repeating unit of both networks.
template <class T>
struct ConvBlockT {
  Conv2dT<T> conv;
  BatchNorm2dT<T> bn;
  ReLUT<T> relu;

  ConvBlockT() = default;
  ConvBlockT(int ic, int oc, int k, int s, int p, const std::string& name)
      : conv(ic, oc, k, s, p, name), bn(oc, name + ".bn") {}

  void init(Rng& rng) {
    conv.init(rng);
    bn.init(rng);
  }
  TensorT<T> forward(const TensorT<T>& x) {
    return relu.forward(bn.forward(conv.forward(x)));
  }
  TensorT<T> backward(const TensorT<T>& gy) {
    return conv.backward(bn.backward(relu.backward(gy)));
  }
  void set_mode(bool training, bool track, bool freeze = false) {
    bn.training = training;
    bn.track_running = track;
    bn.freeze_stats = freeze;
  }
  void collect(std::vector<ParamT<T>*>& out) {
    conv.collect(out);
    bn.collect(out);
  }
  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    bn.collect_state(out);
  }
};

template <class T>
struct DeconvBlockT {
  Deconv2dT<T> deconv;
  BatchNorm2dT<T> bn;
  ReLUT<T> relu;

  DeconvBlockT() = default;
  DeconvBlockT(int ic, int oc, const std::string& name)
      : deconv(ic, oc, 4, 2, 1, name), bn(oc, name + ".bn") {}

  void init(Rng& rng) {
    deconv.init(rng);
    bn.init(rng);
  }
  TensorT<T> forward(const TensorT<T>& x) {
    return relu.forward(bn.forward(deconv.forward(x)));
  }
  TensorT<T> backward(const TensorT<T>& gy) {
    return deconv.backward(bn.backward(relu.backward(gy)));
  }
  void set_mode(bool training, bool track, bool freeze = false) {
    bn.training = training;
    bn.track_running = track;
    bn.freeze_stats = freeze;
  }
  void collect(std::vector<ParamT<T>*>& out) {
    deconv.collect(out);
    bn.collect(out);
  }
  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    bn.collect_state(out);
  }
};

// Coarse interpolation network. Two stems ingest the previous-frame and
// next-frame halves of the 8-channel stack; a residual encoder in the
// ResNet-34 topology (at reduced width) downsamples by 32 in five steps and
// five deconv stages with concat skips climb back to full resolution; a 1x1
// linear head emits depth.
struct CoarseNetConfig {
  int input_channels = 8;
  int stem_kernels = 8;
  int conv1_kernel = 7;
  std::array<int, 4> stage_widths{16, 32, 64, 128};
  int blocks_per_stage = 2;
  std::array<int, 5> dec_widths{64, 32, 16, 16, 16};
  double head_init_scale = 0.1;
};

template <class T>
struct CoarseNetT {
  CoarseNetConfig cfg;
  ConvBlockT<T> stem_prev, stem_next, conv1;
  std::vector<ResidualBlockT<T>> stages;  // blocks, 4 * blocks_per_stage
  DeconvBlockT<T> dec1, dec2, dec3, dec4, dec5;
  Conv2dT<T> head;

  // forward caches for the concat splits
  TensorT<T> s_, c1_, e1_, e2_, e3_;

  CoarseNetT() : CoarseNetT(CoarseNetConfig{}) {}

  explicit CoarseNetT(const CoarseNetConfig& c) : cfg(c) {
    if (cfg.input_channels < 2 || cfg.input_channels % 2 != 0)
      throw std::invalid_argument("coarse: input channels must be even");
    const int half = cfg.input_channels / 2;
    const int stem_out = 2 * cfg.stem_kernels;
    stem_prev = ConvBlockT<T>(half, cfg.stem_kernels, 3, 1, 1,
                              "coarse.stem_prev");
    stem_next = ConvBlockT<T>(half, cfg.stem_kernels, 3, 1, 1,
                              "coarse.stem_next");
    conv1 = ConvBlockT<T>(stem_out, cfg.stage_widths[0], cfg.conv1_kernel, 2,
                          cfg.conv1_kernel / 2, "coarse.conv1");

    int in_w = cfg.stage_widths[0];
    for (int s = 0; s < 4; ++s) {
      for (int b = 0; b < cfg.blocks_per_stage; ++b) {
        std::string name = "coarse.stage" + std::to_string(s + 1) + ".block" +
                           std::to_string(b + 1);
        int stride = b == 0 ? 2 : 1;
        stages.emplace_back(in_w, cfg.stage_widths[s], stride, name);
        in_w = cfg.stage_widths[s];
      }
    }

    dec1 = DeconvBlockT<T>(cfg.stage_widths[3], cfg.dec_widths[0],
                           "coarse.dec1");
    dec2 = DeconvBlockT<T>(cfg.dec_widths[0] + cfg.stage_widths[2],
                           cfg.dec_widths[1], "coarse.dec2");
    dec3 = DeconvBlockT<T>(cfg.dec_widths[1] + cfg.stage_widths[1],
                           cfg.dec_widths[2], "coarse.dec3");
    dec4 = DeconvBlockT<T>(cfg.dec_widths[2] + cfg.stage_widths[0],
                           cfg.dec_widths[3], "coarse.dec4");
    dec5 = DeconvBlockT<T>(cfg.dec_widths[3] + cfg.stage_widths[0],
                           cfg.dec_widths[4], "coarse.dec5");
    head = Conv2dT<T>(cfg.dec_widths[4] + stem_out, 1, 1, 1, 0, "coarse.head");
  }

  void init(Rng& rng) {
    stem_prev.init(rng);
    stem_next.init(rng);
    conv1.init(rng);
    for (auto& b : stages) b.init(rng);
    dec1.init(rng);
    dec2.init(rng);
    dec3.init(rng);
    dec4.init(rng);
    dec5.init(rng);
    head.init(rng, cfg.head_init_scale);
  }

  void set_mode(bool training, bool track, bool freeze = false) {
    stem_prev.set_mode(training, track, freeze);
    stem_next.set_mode(training, track, freeze);
    conv1.set_mode(training, track, freeze);
    for (auto& b : stages) b.set_mode(training, track, freeze);
    dec1.set_mode(training, track, freeze);
    dec2.set_mode(training, track, freeze);
    dec3.set_mode(training, track, freeze);
    dec4.set_mode(training, track, freeze);
    dec5.set_mode(training, track, freeze);
  }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != cfg.input_channels)
      throw std::invalid_argument("coarse: wrong input channel count");
    if (x.h % 32 != 0 || x.w % 32 != 0)
      throw std::invalid_argument(
          "coarse: spatial dims must be divisible by 32");

    auto [xp, xn] = split_channels(x, cfg.input_channels / 2);
    s_ = concat_channels(stem_prev.forward(xp), stem_next.forward(xn));
    c1_ = conv1.forward(s_);

    TensorT<T> t = c1_;
    int bi = 0;
    for (int s = 0; s < 4; ++s) {
      for (int b = 0; b < cfg.blocks_per_stage; ++b)
        t = stages[static_cast<std::size_t>(bi++)].forward(t);
      if (s == 0) e1_ = t;
      if (s == 1) e2_ = t;
      if (s == 2) e3_ = t;
    }

    TensorT<T> u = concat_channels(dec1.forward(t), e3_);
    u = concat_channels(dec2.forward(u), e2_);
    u = concat_channels(dec3.forward(u), e1_);
    u = concat_channels(dec4.forward(u), c1_);
    u = concat_channels(dec5.forward(u), s_);
    return head.forward(u);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    auto [g_u5, g_s_skip] = split_channels(head.backward(gy),
                                           cfg.dec_widths[4]);
    auto [g_u4, g_c1_skip] = split_channels(dec5.backward(g_u5),
                                            cfg.dec_widths[3]);
    auto [g_u3, g_e1_skip] = split_channels(dec4.backward(g_u4),
                                            cfg.dec_widths[2]);
    auto [g_u2, g_e2_skip] = split_channels(dec3.backward(g_u3),
                                            cfg.dec_widths[1]);
    auto [g_u1, g_e3_skip] = split_channels(dec2.backward(g_u2),
                                            cfg.dec_widths[0]);
    TensorT<T> g = dec1.backward(g_u1);

    int bi = static_cast<int>(stages.size());
    for (int s = 3; s >= 0; --s) {
      for (int b = 0; b < cfg.blocks_per_stage; ++b)
        g = stages[static_cast<std::size_t>(--bi)].backward(g);
      if (s == 3) add_inplace(g, g_e3_skip);
      if (s == 2) add_inplace(g, g_e2_skip);
      if (s == 1) add_inplace(g, g_e1_skip);
    }
    add_inplace(g, g_c1_skip);

    TensorT<T> g_s = conv1.backward(g);
    add_inplace(g_s, g_s_skip);
    auto [g_sp, g_sn] = split_channels(g_s, cfg.stem_kernels);
    return concat_channels(stem_prev.backward(g_sp), stem_next.backward(g_sn));
  }

  void collect(std::vector<ParamT<T>*>& out) {
    stem_prev.collect(out);
    stem_next.collect(out);
    conv1.collect(out);
    for (auto& b : stages) b.collect(out);
    dec1.collect(out);
    dec2.collect(out);
    dec3.collect(out);
    dec4.collect(out);
    dec5.collect(out);
    head.collect(out);
  }

  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    stem_prev.collect_state(out);
    stem_next.collect_state(out);
    conv1.collect_state(out);
    for (auto& b : stages) b.collect_state(out);
    dec1.collect_state(out);
    dec2.collect_state(out);
    dec3.collect_state(out);
    dec4.collect_state(out);
    dec5.collect_state(out);
  }
};

// Refinement network: a light U-Net over the coarse depth and the color
// frame, each passed through its own 8-kernel stem. The last deconv is the
// linear head. With residual=true the network predicts a correction added to
// the coarse input instead of absolute depth.
struct RefineNetConfig {
  int stem_kernels = 8;
  std::array<int, 5> enc_widths{16, 32, 64, 64, 64};
  std::array<int, 3> dec_widths{64, 32, 16};
  bool residual = false;
  double head_init_scale = 0.1;
};

template <class T>
struct RefineNetT {
  RefineNetConfig cfg;
  ConvBlockT<T> stem_depth, stem_color;
  ConvBlockT<T> enc1, enc2, enc3, enc4, enc5;
  DeconvBlockT<T> udec1, udec2, udec3;
  Deconv2dT<T> head;

  TensorT<T> e2_, e3_, e4_;

  RefineNetT() : RefineNetT(RefineNetConfig{}) {}

  explicit RefineNetT(const RefineNetConfig& c) : cfg(c) {
    const int stem_out = 2 * cfg.stem_kernels;
    stem_depth = ConvBlockT<T>(1, cfg.stem_kernels, 3, 1, 1,
                               "refine.stem_depth");
    stem_color = ConvBlockT<T>(3, cfg.stem_kernels, 3, 1, 1,
                               "refine.stem_color");
    enc1 = ConvBlockT<T>(stem_out, cfg.enc_widths[0], 3, 1, 1, "refine.enc1");
    enc2 = ConvBlockT<T>(cfg.enc_widths[0], cfg.enc_widths[1], 3, 2, 1,
                         "refine.enc2");
    enc3 = ConvBlockT<T>(cfg.enc_widths[1], cfg.enc_widths[2], 3, 2, 1,
                         "refine.enc3");
    enc4 = ConvBlockT<T>(cfg.enc_widths[2], cfg.enc_widths[3], 3, 2, 1,
                         "refine.enc4");
    enc5 = ConvBlockT<T>(cfg.enc_widths[3], cfg.enc_widths[4], 3, 2, 1,
                         "refine.enc5");
    udec1 = DeconvBlockT<T>(cfg.enc_widths[4], cfg.dec_widths[0],
                            "refine.dec1");
    udec2 = DeconvBlockT<T>(cfg.dec_widths[0] + cfg.enc_widths[3],
                            cfg.dec_widths[1], "refine.dec2");
    udec3 = DeconvBlockT<T>(cfg.dec_widths[1] + cfg.enc_widths[2],
                            cfg.dec_widths[2], "refine.dec3");
    head = Deconv2dT<T>(cfg.dec_widths[2] + cfg.enc_widths[1], 1, 4, 2, 1,
                        "refine.head");
  }

  void init(Rng& rng) {
    stem_depth.init(rng);
    stem_color.init(rng);
    enc1.init(rng);
    enc2.init(rng);
    enc3.init(rng);
    enc4.init(rng);
    enc5.init(rng);
    udec1.init(rng);
    udec2.init(rng);
    udec3.init(rng);
    head.init(rng, cfg.head_init_scale);
  }

  void set_mode(bool training, bool track, bool freeze = false) {
    stem_depth.set_mode(training, track, freeze);
    stem_color.set_mode(training, track, freeze);
    enc1.set_mode(training, track, freeze);
    enc2.set_mode(training, track, freeze);
    enc3.set_mode(training, track, freeze);
    enc4.set_mode(training, track, freeze);
    enc5.set_mode(training, track, freeze);
    udec1.set_mode(training, track, freeze);
    udec2.set_mode(training, track, freeze);
    udec3.set_mode(training, track, freeze);
  }

  TensorT<T> forward(const TensorT<T>& depth, const TensorT<T>& color) {
    if (depth.c != 1 || color.c != 3)
      throw std::invalid_argument("refine: wants 1ch depth and 3ch color");
    if (depth.h != color.h || depth.w != color.w)
      throw std::invalid_argument("refine: depth/color sizes differ");
    if (depth.h % 16 != 0 || depth.w % 16 != 0)
      throw std::invalid_argument(
          "refine: spatial dims must be divisible by 16");

    TensorT<T> s =
        concat_channels(stem_depth.forward(depth), stem_color.forward(color));
    TensorT<T> e1 = enc1.forward(s);
    e2_ = enc2.forward(e1);
    e3_ = enc3.forward(e2_);
    e4_ = enc4.forward(e3_);
    TensorT<T> e5 = enc5.forward(e4_);

    TensorT<T> u = concat_channels(udec1.forward(e5), e4_);
    u = concat_channels(udec2.forward(u), e3_);
    u = concat_channels(udec3.forward(u), e2_);
    TensorT<T> y = head.forward(u);
    if (cfg.residual) add_inplace(y, depth);
    return y;
  }

  // Returns (grad wrt coarse depth, grad wrt color).
  std::pair<TensorT<T>, TensorT<T>> backward(const TensorT<T>& gy) {
    auto [g_u3, g_e2_skip] = split_channels(head.backward(gy),
                                            cfg.dec_widths[2]);
    auto [g_u2, g_e3_skip] = split_channels(udec3.backward(g_u3),
                                            cfg.dec_widths[1]);
    auto [g_u1, g_e4_skip] = split_channels(udec2.backward(g_u2),
                                            cfg.dec_widths[0]);
    TensorT<T> g_e5 = udec1.backward(g_u1);

    TensorT<T> g_e4 = enc5.backward(g_e5);
    add_inplace(g_e4, g_e4_skip);
    TensorT<T> g_e3 = enc4.backward(g_e4);
    add_inplace(g_e3, g_e3_skip);
    TensorT<T> g_e2 = enc3.backward(g_e3);
    add_inplace(g_e2, g_e2_skip);
    TensorT<T> g_e1 = enc2.backward(g_e2);
    TensorT<T> g_s = enc1.backward(g_e1);

    auto [g_sd, g_sc] = split_channels(g_s, cfg.stem_kernels);
    TensorT<T> g_depth = stem_depth.backward(g_sd);
    TensorT<T> g_color = stem_color.backward(g_sc);
    if (cfg.residual) add_inplace(g_depth, gy);
    return {std::move(g_depth), std::move(g_color)};
  }

  void collect(std::vector<ParamT<T>*>& out) {
    stem_depth.collect(out);
    stem_color.collect(out);
    enc1.collect(out);
    enc2.collect(out);
    enc3.collect(out);
    enc4.collect(out);
    enc5.collect(out);
    udec1.collect(out);
    udec2.collect(out);
    udec3.collect(out);
    head.collect(out);
  }

  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    stem_depth.collect_state(out);
    stem_color.collect_state(out);
    enc1.collect_state(out);
    enc2.collect_state(out);
    enc3.collect_state(out);
    enc4.collect_state(out);
    enc5.collect_state(out);
    udec1.collect_state(out);
    udec2.collect_state(out);
    udec3.collect_state(out);
  }
};

// Coarse interpolation followed by color-guided refinement.
template <class T>
struct CascadeT {
  CoarseNetT<T> coarse;
  RefineNetT<T> refine;

  CascadeT() = default;
  CascadeT(const CoarseNetConfig& cc, const RefineNetConfig& rc)
      : coarse(cc), refine(rc) {}

  void init(Rng& rng) {
    coarse.init(rng);
    refine.init(rng);
  }

  void set_mode(bool training, bool track, bool freeze = false) {
    coarse.set_mode(training, track, freeze);
    refine.set_mode(training, track, freeze);
  }

  struct Out {
    TensorT<T> d_coarse;
    TensorT<T> d_refined;
  };

  Out forward(const TensorT<T>& stack, const TensorT<T>& color) {
    Out o;
    o.d_coarse = coarse.forward(stack);
    o.d_refined = refine.forward(o.d_coarse, color);
    return o;
  }

  // g_coarse: direct gradient on the coarse map (the w1 loss term);
  // g_refined: gradient on the refined map. Returns the stack gradient.
  TensorT<T> backward(const TensorT<T>& g_coarse, const TensorT<T>& g_refined) {
    auto [g_dc, g_color] = refine.backward(g_refined);
    (void)g_color;
    add_inplace(g_dc, g_coarse);
    return coarse.backward(g_dc);
  }

  std::vector<ParamT<T>*> params() {
    std::vector<ParamT<T>*> out;
    coarse.collect(out);
    refine.collect(out);
    return out;
  }

  std::vector<std::pair<std::string, std::vector<T>*>> state_buffers() {
    std::vector<std::pair<std::string, std::vector<T>*>> out;
    coarse.collect_state(out);
    refine.collect_state(out);
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->count();
    return n;
  }
};

using Cascade = CascadeT<float>;

}  // namespace plin::nn
