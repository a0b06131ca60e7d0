#include "rsn/data/augment.hpp"

#include <algorithm>
#include <numeric>

#include "rsn/data/synth.hpp"

namespace rsn {

AugmentParams sample_augment(std::mt19937_64& rng, const AugmentConfig& cfg) {
  AugmentParams p;
  if (!cfg.enabled) return p;
  std::uniform_real_distribution<double> u(0, 1);
  p.rotation = (2 * u(rng) - 1) * cfg.max_rotation;
  p.scale = cfg.min_scale + (cfg.max_scale - cfg.min_scale) * u(rng);
  p.flip = u(rng) < cfg.flip_probability;
  return p;
}

KeypointSet swap_pairs(const KeypointSet& pose, const FlipPairs& pairs) {
  const std::vector<int> perm = flip_permutation(pairs, static_cast<int>(pose.joints.size()));
  KeypointSet out = pose;
  for (std::size_t k = 0; k < pose.joints.size(); ++k) out.joints[k] = pose.joints[perm[k]];
  return out;
}

Sample make_sample(const Image& img, const KeypointSet& pose, const AugmentParams& params, int out_w, int out_h,
                   const FlipPairs& pairs, long long source_id) {
  Sample s;
  s.source_id = source_id;
  s.flipped = params.flip;
  s.crop_from_image = crop_transform(pose.bbox, out_w, out_h, params.rotation, params.scale);
  if (params.flip) s.crop_from_image = mirror_x(out_w) * s.crop_from_image;
  s.image = warp_affine(img, s.crop_from_image.inverse(), out_w, out_h);

  s.pose = pose;
  for (Joint& j : s.pose.joints) {
    const Point p = s.crop_from_image.apply({j.x, j.y});
    j.x = p.x;
    j.y = p.y;
    if (j.visibility > 0 && (p.x < 0 || p.y < 0 || p.x > out_w - 1 || p.y > out_h - 1)) j.visibility = 0;
  }
  if (params.flip) s.pose = swap_pairs(s.pose, pairs);
  const Box& b = pose.bbox;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const Point c : {Point{b.x, b.y}, Point{b.x + b.w, b.y}, Point{b.x, b.y + b.h}, Point{b.x + b.w, b.y + b.h}}) {
    const Point q = s.crop_from_image.apply(c);
    x0 = std::min(x0, q.x), y0 = std::min(y0, q.y), x1 = std::max(x1, q.x), y1 = std::max(y1, q.y);
  }
  s.pose.bbox = {x0, y0, x1 - x0, y1 - y0};
  return s;
}

std::vector<int> epoch_order(std::uint64_t seed, int epoch, int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng = sample_rng(seed ^ 0x9e3779b97f4a7c15ull, static_cast<std::uint64_t>(epoch));
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % static_cast<std::uint64_t>(i + 1)]);
  return order;
}

}  // namespace rsn
