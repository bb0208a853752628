#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plin::nn {

// CHW activation tensor. Float in production, double in gradient checks.
template <class T>
struct TensorT {
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  TensorT() = default;

  TensorT(int c_, int h_, int w_, T fill = T(0)) : c(c_), h(h_), w(w_) {
    if (c_ < 1 || h_ < 1 || w_ < 1)
      throw std::invalid_argument("Tensor: dimensions must be >= 1");
    v.assign(static_cast<std::size_t>(c_) * h_ * w_, fill);
  }

  T& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  T at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  std::size_t size() const { return v.size(); }
  bool same_shape(const TensorT& o) const {
    return c == o.c && h == o.h && w == o.w;
  }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <class To, class From>
TensorT<To> cast(const TensorT<From>& x) {
  TensorT<To> out(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    out.v[i] = static_cast<To>(x.v[i]);
  return out;
}

// Learnable array plus its gradient and Adam moments, flat with a recorded
// shape. Layers register these with the trainer by pointer.
template <class T>
struct ParamT {
  std::string name;
  std::vector<int> shape;
  std::vector<T> v, g, m, s;  // value, grad, Adam first/second moments

  void resize(std::vector<int> shp, std::string nm) {
    shape = std::move(shp);
    name = std::move(nm);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    v.assign(n, T(0));
    g.assign(n, T(0));
    m.assign(n, T(0));
    s.assign(n, T(0));
  }

  std::size_t count() const { return v.size(); }
};

}  // namespace plin::nn
