#include "plin/nn/loss.hpp"

namespace plin::nn {

double masked_l2(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("masked_l2: shapes differ");

  double sum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (!gt.mask.get(u, v)) continue;
      double d = pred.grid.at(u, v) - gt.grid.at(u, v);
      sum += d * d;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("masked_l2: empty valid set");
  return sum / static_cast<double>(n);
}

double total_loss(const DepthMap& d_coarse, const DepthMap& d_refined,
                  const DepthMap& gt, double w1, double w2) {
  return w1 * masked_l2(d_coarse, gt) + w2 * masked_l2(d_refined, gt);
}

}  // namespace plin::nn
