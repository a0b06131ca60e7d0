#include "rsn/metrics/average_precision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "rsn/metrics/oks.hpp"

namespace rsn {

double APReport::at(double threshold) const {
  for (const auto& [t, ap] : per_threshold)
    if (std::abs(t - threshold) < 1e-9) return ap;
  throw std::out_of_range("no AP recorded at threshold " + std::to_string(threshold));
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].id < dets[b].id;
  });
  return order;
}

std::vector<int> greedy_match(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                              std::span<const double> sigmas, double threshold) {
  std::map<long long, std::vector<int>> by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) by_image[gts[g].image_id].push_back(static_cast<int>(g));
  for (auto& [image, list] : by_image)
    std::sort(list.begin(), list.end(), [&](int a, int b) { return gts[a].id < gts[b].id; });

  std::vector<bool> taken(gts.size(), false);
  const std::vector<std::size_t> order = score_order(dets);
  std::vector<int> match(dets.size(), -1);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& d = dets[order[rank]];
    const auto it = by_image.find(d.image_id);
    if (it == by_image.end()) continue;
    int best = -1;
    double best_oks = threshold;
    for (int g : it->second) {
      if (taken[g]) continue;
      const double o = oks(d.pose, gts[g].pose, gts[g].area, sigmas);
      if (o >= best_oks && (best < 0 || o > best_oks)) {
        best = g;
        best_oks = o;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      match[rank] = best;
    }
  }
  return match;
}

double interpolated_ap(const std::vector<bool>& tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = tp.size();
  std::vector<double> precision(n), recall(n);
  double hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += tp[i];
    precision[i] = hits / static_cast<double>(i + 1);
    recall[i] = hits / static_cast<double>(num_gt);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double total = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    if (it != recall.end()) total += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return total / 101.0;
}

APReport average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                           std::span<const double> sigmas, std::span<const double> thresholds) {
  for (const GroundTruth& g : gts)
    if (g.pose.labeled() == 0) throw std::invalid_argument("ground truth " + std::to_string(g.id) + " has no labeled joint");
  APReport report;
  for (double t : thresholds) {
    const std::vector<int> match = greedy_match(dets, gts, sigmas, t);
    std::vector<bool> tp(match.size());
    for (std::size_t i = 0; i < match.size(); ++i) tp[i] = match[i] >= 0;
    report.per_threshold.emplace_back(t, interpolated_ap(tp, gts.size()));
  }
  double sum = 0;
  for (const auto& [t, ap] : report.per_threshold) sum += ap;
  report.mean_ap = report.per_threshold.empty() ? 0.0 : sum / static_cast<double>(report.per_threshold.size());
  return report;
}

}  // namespace rsn
