#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "plin/nn/tensor.hpp"

namespace plin::nn {

// Central-difference verification of analytic gradients, in double.
// Directions where both gradients are below skip_below carry no usable
// relative error (zero-parameter directions) and are skipped but counted.
struct GradCheckReport {
  double max_rel = 0.0;
  int checked = 0;
  int skipped = 0;
  std::string worst;
};

struct GradChecker {
  double epsilon = 1e-5;
  double skip_below = 1e-6;
  // One-sided slopes disagreeing by more than this (relative) flags a
  // rectifier kink between the sample points; smooth curvature at this
  // epsilon sits orders of magnitude lower.
  double kink_tol = 1e-3;
  GradCheckReport report;

  void compare(double analytic, double numeric, const std::string& label) {
    double denom = std::max(std::abs(analytic), std::abs(numeric));
    if (denom < skip_below) {
      ++report.skipped;
      return;
    }
    double rel = std::abs(analytic - numeric) / denom;
    if (rel > report.max_rel) {
      report.max_rel = rel;
      report.worst = label;
    }
    ++report.checked;
  }

  // Perturbs *slot in place, re-evaluating the loss; eval must be a pure
  // function of the current parameter values.
  template <class Eval>
  void check_slot(double& slot, double analytic, Eval&& eval,
                  const std::string& label) {
    const double old = slot;
    slot = old + epsilon;
    const double lp = eval();
    slot = old - epsilon;
    const double lm = eval();
    slot = old;
    const double l0 = eval();
    // The central difference is meaningless across a kink, while the
    // analytic gradient at the base point is still well defined. Skip.
    const double dp = (lp - l0) / epsilon;
    const double dm = (l0 - lm) / epsilon;
    const double mag = std::max({std::abs(dp), std::abs(dm), skip_below});
    if (std::abs(dp - dm) > kink_tol * mag) {
      ++report.skipped;
      return;
    }
    compare(analytic, (lp - lm) / (2.0 * epsilon), label);
  }

  // Checks every stride-th element of a parameter against its recorded
  // analytic gradient.
  template <class Eval>
  void check_param(ParamT<double>& p, Eval&& eval, std::size_t stride = 1) {
    for (std::size_t i = 0; i < p.v.size(); i += stride)
      check_slot(p.v[i], p.g[i], eval,
                 p.name + "[" + std::to_string(i) + "]");
  }

  // Same, for an input tensor whose analytic gradient was returned by
  // backward.
  template <class Eval>
  void check_input(TensorT<double>& x, const TensorT<double>& gx, Eval&& eval,
                   std::size_t stride = 1) {
    for (std::size_t i = 0; i < x.v.size(); i += stride)
      check_slot(x.v[i], gx.v[i], eval, "input[" + std::to_string(i) + "]");
  }
};

}  // namespace plin::nn
