#pragma once

// Brute-force reference for keypoint AP and the random evaluation cases it is
// checked on; shared by the metrics tests and the acceptance gate.

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "rsn/metrics/average_precision.hpp"
#include "rsn/metrics/oks.hpp"
#include "support.hpp"

namespace rsn::test {

inline KeypointSet random_pose(std::mt19937_64& rng, double cx, double cy, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  KeypointSet k;
  for (int j = 0; j < kCocoJoints; ++j) k.joints.push_back({cx + u(rng), cy + u(rng), 1.0, 2});
  k.bbox = {cx - spread, cy - spread, 2 * spread, 2 * spread};
  return k;
}

inline KeypointSet jitter(std::mt19937_64& rng, const KeypointSet& k, double amount) {
  std::normal_distribution<double> n(0, amount);
  KeypointSet out = k;
  for (Joint& j : out.joints) {
    j.x += n(rng);
    j.y += n(rng);
  }
  return out;
}

// The matching protocol restated as an optimization: among all one-to-one
// assignments of detections to same-image ground truths with OKS >= t, the
// greedy protocol output is the one whose per-detection (OKS, -gt id) list,
// read in score order, is lexicographically largest. Enumerate them all.
inline std::vector<int> exhaustive_match(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts, double t) {
  const std::vector<std::size_t> order = score_order(dets);
  const std::size_t n = order.size();
  std::vector<std::vector<double>> o(n, std::vector<double>(gts.size(), -1));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (dets[order[r]].image_id == gts[g].image_id) o[r][g] = oks(dets[order[r]].pose, gts[g].pose, gts[g].area, coco_sigmas());

  using Key = std::vector<std::pair<double, long long>>;
  Key best_key;
  bool found = false;
  std::vector<int> best, cur(n, -1);
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t, Key&)> rec = [&](std::size_t r, Key& key) {
    if (r == n) {
      if (!found || key > best_key) {
        found = true;
        best_key = key;
        best = cur;
      }
      return;
    }
    key.push_back({-1.0, 0});
    cur[r] = -1;
    rec(r + 1, key);
    key.pop_back();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || o[r][g] < t) continue;
      used[g] = true;
      cur[r] = static_cast<int>(g);
      key.push_back({o[r][g], -gts[g].id});
      rec(r + 1, key);
      key.pop_back();
      used[g] = false;
      cur[r] = -1;
    }
  };
  Key key;
  rec(0, key);
  return best;
}

// 101-point interpolated AP straight from the definition: at each recall
// level, the best precision achieved at any rank reaching that recall.
inline double ap_oracle(const std::vector<int>& match, std::size_t num_gt) {
  if (num_gt == 0) return 0;
  double total = 0;
  for (int k = 0; k <= 100; ++k) {
    double best = 0;
    int hits = 0;
    for (std::size_t r = 0; r < match.size(); ++r) {
      hits += match[r] >= 0;
      const double recall = static_cast<double>(hits) / num_gt;
      if (recall + 1e-12 >= k / 100.0) best = std::max(best, static_cast<double>(hits) / (r + 1));
    }
    total += best;
  }
  return total / 101;
}

struct APCase {
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
};

inline APCase random_case(std::mt19937_64& rng) {
  APCase c;
  const int images = rand_int(rng, 1, 3);
  const int ngt = rand_int(rng, 0, 6), ndet = rand_int(rng, 0, 6);
  for (int g = 0; g < ngt; ++g) {
    GroundTruth gt;
    gt.id = 100 + g;
    gt.image_id = rand_int(rng, 1, images);
    gt.pose = random_pose(rng, rand_int(rng, 0, 3) * 15.0, 0, 20);
    if (rand_int(rng, 0, 3) == 0) gt.pose.joints[rand_int(rng, 0, 16)].visibility = 0;
    gt.area = 1600;
    c.gts.push_back(gt);
  }
  for (int d = 0; d < ndet; ++d) {
    Detection det;
    det.id = d;
    if (!c.gts.empty() && rand_int(rng, 0, 4) > 0) {
      const GroundTruth& g = c.gts[rand_int(rng, 0, ngt - 1)];
      det.image_id = g.image_id;
      det.pose = jitter(rng, g.pose, std::uniform_real_distribution<double>(0.5, 8)(rng));
    } else {
      det.image_id = rand_int(rng, 1, images);
      det.pose = random_pose(rng, rand_int(rng, 0, 3) * 15.0, 0, 20);
    }
    det.score = rand_int(rng, 1, 5) / 5.0;  // coarse scores force ties
    c.dets.push_back(det);
  }
  return c;
}

}  // namespace rsn::test
