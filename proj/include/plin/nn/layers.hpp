#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plin/nn/tensor.hpp"
#include "plin/rng.hpp"

namespace plin::nn {

// All layers cache what their backward pass needs during forward, accumulate
// parameter gradients into ParamT::g, and return the input gradient.
// Accumulations run in a fixed serial order per output element, and threads
// only ever own disjoint output slices, so results are bit-identical for any
// thread count.

template <class T>
struct Conv2dT {
  int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
  ParamT<T> w, b;
  TensorT<T> x_;

  Conv2dT() = default;

  Conv2dT(int ic, int oc, int kk, int s, int p, const std::string& name) {
    in_c = ic;
    out_c = oc;
    k = kk;
    stride = s;
    pad = p;
    w.resize({oc, ic, kk, kk}, name + ".w");
    b.resize({oc}, name + ".b");
  }

  // Fan-in scaled Gaussian; scale < 1 tames the output head.
  void init(Rng& rng, double scale = 1.0) {
    double sigma = scale * std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (auto& x : w.v) x = static_cast<T>(rng.normal(0.0, sigma));
    for (auto& x : b.v) x = T(0);
  }

  int out_dim(int in) const { return (in + 2 * pad - k) / stride + 1; }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != in_c) throw std::invalid_argument("conv: channel mismatch");
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv: output collapsed");
    x_ = x;
    TensorT<T> y(out_c, oh, ow);

#pragma omp parallel for if (y.size() > 2048)
    for (int oc = 0; oc < out_c; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = static_cast<double>(b.v[oc]);
          for (int ic = 0; ic < in_c; ++ic) {
            for (int kh = 0; kh < k; ++kh) {
              const int iy = oy * stride - pad + kh;
              if (iy < 0 || iy >= x.h) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int ix = ox * stride - pad + kw;
                if (ix < 0 || ix >= x.w) continue;
                acc += static_cast<double>(
                           w.v[((static_cast<std::size_t>(oc) * in_c + ic) * k +
                                kh) *
                                   k +
                               kw]) *
                       static_cast<double>(x.at(ic, iy, ix));
              }
            }
          }
          y.at(oc, oy, ox) = static_cast<T>(acc);
        }
      }
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    const int oh = gy.h, ow = gy.w;
    TensorT<T> gx(in_c, x_.h, x_.w);

    // Weight and bias gradients: one thread per output channel.
#pragma omp parallel for if (gy.size() > 2048)
    for (int oc = 0; oc < out_c; ++oc) {
      double gb = 0.0;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          gb += static_cast<double>(gy.at(oc, oy, ox));
      b.g[oc] += static_cast<T>(gb);

      for (int ic = 0; ic < in_c; ++ic) {
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            double acc = 0.0;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride - pad + kh;
              if (iy < 0 || iy >= x_.h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride - pad + kw;
                if (ix < 0 || ix >= x_.w) continue;
                acc += static_cast<double>(gy.at(oc, oy, ox)) *
                       static_cast<double>(x_.at(ic, iy, ix));
              }
            }
            w.g[((static_cast<std::size_t>(oc) * in_c + ic) * k + kh) * k +
                kw] += static_cast<T>(acc);
          }
        }
      }
    }

    // Input gradient: one thread per input channel.
#pragma omp parallel for if (gx.size() > 2048)
    for (int ic = 0; ic < in_c; ++ic) {
      for (int oc = 0; oc < out_c; ++oc) {
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            const T wv =
                w.v[((static_cast<std::size_t>(oc) * in_c + ic) * k + kh) * k +
                    kw];
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride - pad + kh;
              if (iy < 0 || iy >= x_.h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride - pad + kw;
                if (ix < 0 || ix >= x_.w) continue;
                gx.at(ic, iy, ix) += static_cast<T>(
                    static_cast<double>(wv) *
                    static_cast<double>(gy.at(oc, oy, ox)));
              }
            }
          }
        }
      }
    }
    return gx;
  }

  void collect(std::vector<ParamT<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

// Transposed convolution, weight layout (in_c, out_c, k, k). With k=4, s=2,
// p=1 each stage exactly doubles the spatial size.
template <class T>
struct Deconv2dT {
  int in_c = 0, out_c = 0, k = 4, stride = 2, pad = 1;
  ParamT<T> w, b;
  TensorT<T> x_;

  Deconv2dT() = default;

  Deconv2dT(int ic, int oc, int kk, int s, int p, const std::string& name) {
    in_c = ic;
    out_c = oc;
    k = kk;
    stride = s;
    pad = p;
    w.resize({ic, oc, kk, kk}, name + ".w");
    b.resize({oc}, name + ".b");
  }

  void init(Rng& rng, double scale = 1.0) {
    double sigma = scale * std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (auto& x : w.v) x = static_cast<T>(rng.normal(0.0, sigma));
    for (auto& x : b.v) x = T(0);
  }

  int out_dim(int in) const { return (in - 1) * stride - 2 * pad + k; }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != in_c) throw std::invalid_argument("deconv: channel mismatch");
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    if (oh < 1 || ow < 1)
      throw std::invalid_argument("deconv: output collapsed");
    x_ = x;
    TensorT<T> y(out_c, oh, ow);

    // Gather form: for each output pixel find the inputs that scatter to it,
    // i.e. iy*stride - pad + kh == oy.
#pragma omp parallel for if (y.size() > 2048)
    for (int oc = 0; oc < out_c; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = static_cast<double>(b.v[oc]);
          for (int kh = 0; kh < k; ++kh) {
            const int ty = oy + pad - kh;
            if (ty < 0 || ty % stride != 0) continue;
            const int iy = ty / stride;
            if (iy >= x.h) continue;
            for (int kw = 0; kw < k; ++kw) {
              const int tx = ox + pad - kw;
              if (tx < 0 || tx % stride != 0) continue;
              const int ix = tx / stride;
              if (ix >= x.w) continue;
              for (int ic = 0; ic < in_c; ++ic)
                acc += static_cast<double>(
                           w.v[((static_cast<std::size_t>(ic) * out_c + oc) *
                                    k +
                                kh) *
                                   k +
                               kw]) *
                       static_cast<double>(x.at(ic, iy, ix));
            }
          }
          y.at(oc, oy, ox) = static_cast<T>(acc);
        }
      }
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    TensorT<T> gx(in_c, x_.h, x_.w);

    // Bias gradient.
    for (int oc = 0; oc < out_c; ++oc) {
      double gb = 0.0;
      for (int oy = 0; oy < gy.h; ++oy)
        for (int ox = 0; ox < gy.w; ++ox)
          gb += static_cast<double>(gy.at(oc, oy, ox));
      b.g[oc] += static_cast<T>(gb);
    }

    // Weight gradient: forward scatter says y(oc, iy*s-p+kh, ix*s-p+kw)
    // receives x(ic, iy, ix) * w(ic, oc, kh, kw). One thread per in channel.
#pragma omp parallel for if (gy.size() > 2048)
    for (int ic = 0; ic < in_c; ++ic) {
      for (int oc = 0; oc < out_c; ++oc) {
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            double acc = 0.0;
            for (int iy = 0; iy < x_.h; ++iy) {
              const int oy = iy * stride - pad + kh;
              if (oy < 0 || oy >= gy.h) continue;
              for (int ix = 0; ix < x_.w; ++ix) {
                const int ox = ix * stride - pad + kw;
                if (ox < 0 || ox >= gy.w) continue;
                acc += static_cast<double>(x_.at(ic, iy, ix)) *
                       static_cast<double>(gy.at(oc, oy, ox));
              }
            }
            w.g[((static_cast<std::size_t>(ic) * out_c + oc) * k + kh) * k +
                kw] += static_cast<T>(acc);
          }
        }
      }
    }

    // Input gradient mirrors the forward scatter.
#pragma omp parallel for if (gx.size() > 2048)
    for (int ic = 0; ic < in_c; ++ic) {
      for (int iy = 0; iy < x_.h; ++iy) {
        for (int ix = 0; ix < x_.w; ++ix) {
          double acc = 0.0;
          for (int oc = 0; oc < out_c; ++oc) {
            for (int kh = 0; kh < k; ++kh) {
              const int oy = iy * stride - pad + kh;
              if (oy < 0 || oy >= gy.h) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int ox = ix * stride - pad + kw;
                if (ox < 0 || ox >= gy.w) continue;
                acc += static_cast<double>(
                           w.v[((static_cast<std::size_t>(ic) * out_c + oc) *
                                    k +
                                kh) *
                                   k +
                               kw]) *
                       static_cast<double>(gy.at(oc, oy, ox));
              }
            }
          }
          gx.at(ic, iy, ix) = static_cast<T>(acc);
        }
      }
    }
    return gx;
  }

  void collect(std::vector<ParamT<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

// Batch-size-1 batch norm: statistics over the spatial dims of each channel.
// Training mode normalizes with the biased batch variance and, when
// track_running is on, folds the unbiased variance into the running buffers
// (momentum 0.1). Eval mode uses the running buffers.
//
// freeze_stats trains against the running buffers instead of the batch
// statistics (buffers held fixed). Late-stage fine-tuning in this mode closes
// the gap between per-sample normalization seen in training and the fixed
// normalization used at inference, which otherwise costs accuracy at batch
// size 1.
template <class T>
struct BatchNorm2dT {
  int c = 0;
  double eps = 1e-5, momentum = 0.1;
  bool track_running = true;
  bool training = true;
  bool freeze_stats = false;
  ParamT<T> gamma, beta;
  std::vector<T> run_mean, run_var;

  TensorT<T> xhat_;
  std::vector<double> inv_std_;

  BatchNorm2dT() = default;

  explicit BatchNorm2dT(int channels, const std::string& name) : c(channels) {
    gamma.resize({channels}, name + ".gamma");
    beta.resize({channels}, name + ".beta");
    run_mean.assign(channels, T(0));
    run_var.assign(channels, T(1));
  }

  void init(Rng&) {
    for (auto& x : gamma.v) x = T(1);
    for (auto& x : beta.v) x = T(0);
  }

  TensorT<T> forward(const TensorT<T>& x) {
    if (x.c != c) throw std::invalid_argument("batch_norm: channel mismatch");
    const std::size_t n = static_cast<std::size_t>(x.h) * x.w;
    TensorT<T> y(x.c, x.h, x.w);

    if (training) {
      if (n < 2)
        throw std::invalid_argument(
            "batch_norm: training needs at least 2 spatial positions");
      xhat_ = TensorT<T>(x.c, x.h, x.w);
      inv_std_.assign(c, 0.0);

#pragma omp parallel for if (x.size() > 2048)
      for (int ci = 0; ci < c; ++ci) {
        const T* px = &x.v[static_cast<std::size_t>(ci) * n];
        double mean, var;
        if (freeze_stats) {
          mean = static_cast<double>(run_mean[ci]);
          var = static_cast<double>(run_var[ci]);
        } else {
          mean = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            mean += static_cast<double>(px[i]);
          mean /= static_cast<double>(n);
          var = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double d = static_cast<double>(px[i]) - mean;
            var += d * d;
          }
          var /= static_cast<double>(n);
        }

        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std_[ci] = inv;
        T* pxh = &xhat_.v[static_cast<std::size_t>(ci) * n];
        T* py = &y.v[static_cast<std::size_t>(ci) * n];
        const double g = static_cast<double>(gamma.v[ci]);
        const double bt = static_cast<double>(beta.v[ci]);
        for (std::size_t i = 0; i < n; ++i) {
          double xh = (static_cast<double>(px[i]) - mean) * inv;
          pxh[i] = static_cast<T>(xh);
          py[i] = static_cast<T>(g * xh + bt);
        }

        if (track_running && !freeze_stats) {
          double unbiased = var * static_cast<double>(n) /
                            static_cast<double>(n - 1);
          run_mean[ci] = static_cast<T>((1.0 - momentum) *
                                            static_cast<double>(run_mean[ci]) +
                                        momentum * mean);
          run_var[ci] = static_cast<T>((1.0 - momentum) *
                                           static_cast<double>(run_var[ci]) +
                                       momentum * unbiased);
        }
      }
    } else {
#pragma omp parallel for if (x.size() > 2048)
      for (int ci = 0; ci < c; ++ci) {
        const double inv =
            1.0 / std::sqrt(static_cast<double>(run_var[ci]) + eps);
        const double mean = static_cast<double>(run_mean[ci]);
        const double g = static_cast<double>(gamma.v[ci]);
        const double bt = static_cast<double>(beta.v[ci]);
        const T* px = &x.v[static_cast<std::size_t>(ci) * n];
        T* py = &y.v[static_cast<std::size_t>(ci) * n];
        for (std::size_t i = 0; i < n; ++i)
          py[i] = static_cast<T>(
              g * (static_cast<double>(px[i]) - mean) * inv + bt);
      }
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    if (!training)
      throw std::logic_error("batch_norm: backward requires training mode");
    const std::size_t n = static_cast<std::size_t>(gy.h) * gy.w;
    TensorT<T> gx(gy.c, gy.h, gy.w);

#pragma omp parallel for if (gy.size() > 2048)
    for (int ci = 0; ci < c; ++ci) {
      const T* pgy = &gy.v[static_cast<std::size_t>(ci) * n];
      const T* pxh = &xhat_.v[static_cast<std::size_t>(ci) * n];
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_gy += static_cast<double>(pgy[i]);
        sum_gy_xhat +=
            static_cast<double>(pgy[i]) * static_cast<double>(pxh[i]);
      }
      gamma.g[ci] += static_cast<T>(sum_gy_xhat);
      beta.g[ci] += static_cast<T>(sum_gy);

      const double mean_gy = sum_gy / static_cast<double>(n);
      const double mean_gy_xhat = sum_gy_xhat / static_cast<double>(n);
      const double scale = static_cast<double>(gamma.v[ci]) * inv_std_[ci];
      T* pgx = &gx.v[static_cast<std::size_t>(ci) * n];
      for (std::size_t i = 0; i < n; ++i) {
        // With frozen statistics the normalizer is a constant affine map,
        // so the centering terms of the batch-stat gradient drop out.
        if (freeze_stats)
          pgx[i] = static_cast<T>(scale * static_cast<double>(pgy[i]));
        else
          pgx[i] = static_cast<T>(
              scale * (static_cast<double>(pgy[i]) - mean_gy -
                       static_cast<double>(pxh[i]) * mean_gy_xhat));
      }
    }
    return gx;
  }

  void collect(std::vector<ParamT<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    out.emplace_back(gamma.name + ".run_mean", &run_mean);
    out.emplace_back(gamma.name + ".run_var", &run_var);
  }
};

template <class T>
struct ReLUT {
  std::vector<std::uint8_t> mask_;

  TensorT<T> forward(const TensorT<T>& x) {
    mask_.assign(x.size(), 0);
    TensorT<T> y(x.c, x.h, x.w);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      if (x.v[i] > T(0)) {
        y.v[i] = x.v[i];
        mask_[i] = 1;
      }
    }
    return y;
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    TensorT<T> gx(gy.c, gy.h, gy.w);
    for (std::size_t i = 0; i < gy.v.size(); ++i)
      if (mask_[i]) gx.v[i] = gy.v[i];
    return gx;
  }
};

// Two 3x3 convs with norm and rectification, added to a skip path that gets
// a 1x1 projection whenever the shape changes.
template <class T>
struct ResidualBlockT {
  int in_c = 0, out_c = 0, stride = 1;
  bool projected = false;
  Conv2dT<T> conv1, conv2, proj;
  BatchNorm2dT<T> bn1, bn2, bnp;
  ReLUT<T> relu1, relu_out;

  ResidualBlockT() = default;

  ResidualBlockT(int ic, int oc, int s, const std::string& name)
      : in_c(ic),
        out_c(oc),
        stride(s),
        projected(s != 1 || ic != oc),
        conv1(ic, oc, 3, s, 1, name + ".conv1"),
        conv2(oc, oc, 3, 1, 1, name + ".conv2"),
        bn1(oc, name + ".bn1"),
        bn2(oc, name + ".bn2") {
    if (projected) {
      proj = Conv2dT<T>(ic, oc, 1, s, 0, name + ".proj");
      bnp = BatchNorm2dT<T>(oc, name + ".bnp");
    }
  }

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    bn1.init(rng);
    bn2.init(rng);
    if (projected) {
      proj.init(rng);
      bnp.init(rng);
    }
  }

  void set_mode(bool training, bool track, bool freeze = false) {
    for (BatchNorm2dT<T>* bn : {&bn1, &bn2, &bnp}) {
      bn->training = training;
      bn->track_running = track;
      bn->freeze_stats = freeze;
    }
  }

  TensorT<T> forward(const TensorT<T>& x) {
    TensorT<T> m = relu1.forward(bn1.forward(conv1.forward(x)));
    TensorT<T> m2 = bn2.forward(conv2.forward(m));
    TensorT<T> skip = projected ? bnp.forward(proj.forward(x)) : x;
    if (!m2.same_shape(skip))
      throw std::invalid_argument("residual_block: branch shapes differ");
    for (std::size_t i = 0; i < m2.v.size(); ++i) m2.v[i] += skip.v[i];
    return relu_out.forward(m2);
  }

  TensorT<T> backward(const TensorT<T>& gy) {
    TensorT<T> g = relu_out.backward(gy);
    // Main branch.
    TensorT<T> gm = conv2.backward(bn2.backward(g));
    TensorT<T> gx = conv1.backward(bn1.backward(relu1.backward(gm)));
    // Skip branch.
    if (projected) {
      TensorT<T> gs = proj.backward(bnp.backward(g));
      for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gs.v[i];
    } else {
      for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += g.v[i];
    }
    return gx;
  }

  void collect(std::vector<ParamT<T>*>& out) {
    conv1.collect(out);
    bn1.collect(out);
    conv2.collect(out);
    bn2.collect(out);
    if (projected) {
      proj.collect(out);
      bnp.collect(out);
    }
  }

  void collect_state(
      std::vector<std::pair<std::string, std::vector<T>*>>& out) {
    bn1.collect_state(out);
    bn2.collect_state(out);
    if (projected) bnp.collect_state(out);
  }
};

template <class T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat: spatial shapes differ");
  TensorT<T> y(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.v.size());
  return y;
}

template <class T>
std::pair<TensorT<T>, TensorT<T>> split_channels(const TensorT<T>& y, int ca) {
  if (ca < 1 || ca >= y.c) throw std::invalid_argument("split: bad cut");
  TensorT<T> a(ca, y.h, y.w), b(y.c - ca, y.h, y.w);
  std::copy(y.v.begin(), y.v.begin() + a.v.size(), a.v.begin());
  std::copy(y.v.begin() + a.v.size(), y.v.end(), b.v.begin());
  return {std::move(a), std::move(b)};
}

}  // namespace plin::nn
