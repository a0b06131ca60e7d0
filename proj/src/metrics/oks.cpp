#include "rsn/metrics/oks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsn {

double oks(const KeypointSet& pred, const KeypointSet& gt, double area, std::span<const double> sigmas) {
  if (!(area > 0)) throw std::invalid_argument("OKS needs a positive object area");
  const std::size_t K = gt.joints.size();
  if (pred.joints.size() != K || sigmas.size() != K) {
    throw std::invalid_argument("OKS: prediction has " + std::to_string(pred.joints.size()) + " joints, ground truth " +
                                std::to_string(K) + ", sigmas " + std::to_string(sigmas.size()));
  }
  double total = 0;
  int labeled = 0;
  for (std::size_t i = 0; i < K; ++i) {
    if (gt.joints[i].visibility <= 0) continue;
    const double dx = pred.joints[i].x - gt.joints[i].x, dy = pred.joints[i].y - gt.joints[i].y;
    const double k = 2 * sigmas[i];
    total += std::exp(-(dx * dx + dy * dy) / (2 * area * k * k));
    ++labeled;
  }
  if (labeled == 0) throw std::invalid_argument("OKS: ground truth has no labeled joint");
  return total / labeled;
}

}  // namespace rsn
