#pragma once

#include <cmath>
#include <vector>

#include "plin/nn/tensor.hpp"

namespace plin::nn {

// Adam with bias correction and a step-decay learning-rate schedule
// (multiply by lr_factor every lr_step_epochs). Moment math runs in double;
// the moments themselves live in the parameter's precision.
template <class T>
struct AdamT {
  double lr0 = 1e-5;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int lr_step_epochs = 5;
  double lr_factor = 0.1;
  long steps = 0;

  double lr_for_epoch(int epoch) const {
    return lr0 * std::pow(lr_factor, epoch / lr_step_epochs);
  }

  void zero_grad(const std::vector<ParamT<T>*>& params) {
    for (ParamT<T>* p : params)
      for (auto& g : p->g) g = T(0);
  }

  void step(const std::vector<ParamT<T>*>& params, double lr) {
    ++steps;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (ParamT<T>* p : params) {
      for (std::size_t i = 0; i < p->v.size(); ++i) {
        const double g = static_cast<double>(p->g[i]);
        const double m =
            beta1 * static_cast<double>(p->m[i]) + (1.0 - beta1) * g;
        const double s =
            beta2 * static_cast<double>(p->s[i]) + (1.0 - beta2) * g * g;
        p->m[i] = static_cast<T>(m);
        p->s[i] = static_cast<T>(s);
        p->v[i] -= static_cast<T>(lr * (m / bc1) /
                                  (std::sqrt(s / bc2) + eps));
      }
    }
  }
};

using Adam = AdamT<float>;

}  // namespace plin::nn
