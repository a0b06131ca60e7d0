#include "rsn/metrics/pckh.hpp"

#include <cmath>
#include <stdexcept>

namespace rsn {

PckReport pck(std::span<const PckSample> samples, double threshold) {
  PckReport r;
  r.threshold = threshold;
  std::size_t K = 0;
  for (const PckSample& s : samples) K = std::max(K, s.gt.size());
  std::vector<int> hits(K, 0);
  r.labeled.assign(K, 0);
  for (const PckSample& s : samples) {
    if (!s.norm || !(*s.norm > 0)) {
      ++r.skipped;
      continue;
    }
    if (s.pred.size() != s.gt.size()) throw std::invalid_argument("PCK: prediction and ground truth joint counts differ");
    const double limit = threshold * *s.norm;
    for (std::size_t k = 0; k < s.gt.size(); ++k) {
      if (s.gt[k].visibility <= 0) continue;
      ++r.labeled[k];
      hits[k] += std::hypot(s.pred[k].x - s.gt[k].x, s.pred[k].y - s.gt[k].y) <= limit;
    }
  }
  double sum = 0;
  int present = 0, all_hits = 0, all_labeled = 0;
  r.per_joint.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    all_hits += hits[k];
    all_labeled += r.labeled[k];
    if (r.labeled[k] == 0) continue;
    r.per_joint[k] = static_cast<double>(hits[k]) / r.labeled[k];
    sum += *r.per_joint[k];
    ++present;
  }
  r.mean = present ? sum / present : 0.0;
  r.overall = all_labeled ? static_cast<double>(all_hits) / all_labeled : 0.0;
  return r;
}

double head_segment(const Box& head_box) { return 0.6 * std::hypot(head_box.w, head_box.h); }

}  // namespace rsn
