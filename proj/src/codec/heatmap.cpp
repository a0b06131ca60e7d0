#include "rsn/codec/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsn {

void render_gaussian(float* out, int h, int w, double cx, double cy, double sigma) {
  const double inv = 1.0 / (2 * sigma * sigma);
  std::vector<double> gx(static_cast<std::size_t>(w));
  for (int x = 0; x < w; ++x) gx[x] = std::exp(-(x - cx) * (x - cx) * inv);
  for (int y = 0; y < h; ++y) {
    const double gy = std::exp(-(y - cy) * (y - cy) * inv);
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(gy * gx[x]);
  }
}

Targets encode_targets(const KeypointSet& kps, int map_h, int map_w, double sigma, int stride) {
  const int K = static_cast<int>(kps.joints.size());
  Targets t{HeatmapStack(K, map_h, map_w), std::vector<float>(static_cast<std::size_t>(K), 0.f)};
  t.heatmaps.to_image = Affine::scaling(stride, stride);
  for (int k = 0; k < K; ++k) {
    const Joint& j = kps.joints[k];
    if (j.visibility <= 0 || !std::isfinite(j.x) || !std::isfinite(j.y)) continue;
    const double cx = std::floor(j.x / stride + 0.5), cy = std::floor(j.y / stride + 0.5);
    if (cx < 0 || cy < 0 || cx >= map_w || cy >= map_h) continue;
    render_gaussian(t.heatmaps.map(k), map_h, map_w, cx, cy, sigma);
    t.mask[k] = 1.f;
  }
  return t;
}

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace

void gaussian_blur(HeatmapStack& h, int kernel, double sigma) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("blur kernel must be odd and positive");
  const int r = kernel / 2;
  std::vector<double> g(static_cast<std::size_t>(kernel));
  double total = 0;
  for (int i = -r; i <= r; ++i) total += g[i + r] = std::exp(-(i * i) / (2 * sigma * sigma));
  for (double& v : g) v /= total;

  const int H = h.height, W = h.width;
  std::vector<double> tmp(static_cast<std::size_t>(H) * W);
  for (int k = 0; k < h.joints; ++k) {
    float* m = h.map(k);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double s = 0;
        for (int i = -r; i <= r; ++i) s += g[i + r] * m[static_cast<std::size_t>(y) * W + reflect101(x + i, W)];
        tmp[static_cast<std::size_t>(y) * W + x] = s;
      }
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double s = 0;
        for (int i = -r; i <= r; ++i) s += g[i + r] * tmp[static_cast<std::size_t>(reflect101(y + i, H)) * W + x];
        m[static_cast<std::size_t>(y) * W + x] = static_cast<float>(s);
      }
  }
}

HeatmapStack mirror(const HeatmapStack& h) {
  HeatmapStack out = h;
  for (int k = 0; k < h.joints; ++k)
    for (int y = 0; y < h.height; ++y)
      for (int x = 0; x < h.width; ++x) out.at(k, y, x) = h.at(k, y, h.width - 1 - x);
  return out;
}

HeatmapStack swap_average(const HeatmapStack& h, const HeatmapStack& aligned, const FlipPairs& pairs) {
  if (h.joints != aligned.joints || h.height != aligned.height || h.width != aligned.width) {
    throw std::invalid_argument("flip averaging needs heatmap stacks of equal shape");
  }
  const std::vector<int> perm = flip_permutation(pairs, h.joints);
  HeatmapStack out = h;
  const std::size_t plane = static_cast<std::size_t>(h.height) * h.width;
  for (int k = 0; k < h.joints; ++k) {
    const float* a = h.map(k);
    const float* b = aligned.map(perm[k]);
    float* o = out.map(k);
    for (std::size_t i = 0; i < plane; ++i) o[i] = 0.5f * (a[i] + b[i]);
  }
  return out;
}

HeatmapStack flip_average(const HeatmapStack& h, const HeatmapStack& h_flip, const FlipPairs& pairs) {
  return swap_average(h, mirror(h_flip), pairs);
}

Peak argmax_peak(const float* map, int h, int w) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const std::size_t best = static_cast<std::size_t>(std::max_element(map, map + n) - map);
  return {static_cast<double>(best % w), static_cast<double>(best / w), std::clamp<double>(map[best], 0.0, 1.0)};
}

Peak locate_peak(const float* map, int h, int w, const DecodeConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::size_t p1 = 0, p2 = n;
  for (std::size_t i = 1; i < n; ++i)
    if (map[i] > map[p1]) p1 = i;
  for (std::size_t i = 0; i < n; ++i)
    if (i != p1 && (p2 == n || map[i] > map[p2])) p2 = i;

  if (p2 == n || map[p1] == map[p2]) {
    const bool constant = std::all_of(map, map + n, [&](float v) { return v == map[0]; });
    if (constant) return {(w - 1) / 2.0, (h - 1) / 2.0, 0.0};
  }
  Peak p{static_cast<double>(p1 % w), static_cast<double>(p1 / w), std::clamp<double>(map[p1], 0.0, 1.0)};
  if (p2 == n) return p;
  const double dx = static_cast<double>(p2 % w) - p.x, dy = static_cast<double>(p2 / w) - p.y;
  const double len = cfg.offset_mode == OffsetMode::unit ? std::hypot(dx, dy) : 1.0;
  p.x += cfg.offset * dx / len;
  p.y += cfg.offset * dy / len;
  return p;
}

KeypointSet decode(const HeatmapStack& h, const std::optional<HeatmapStack>& flipped, const FlipPairs& pairs,
                   double bbox_score, const DecodeConfig& cfg) {
  HeatmapStack m = flipped ? swap_average(h, *flipped, pairs) : h;
  if (cfg.blur) gaussian_blur(m, cfg.blur_kernel, cfg.blur_sigma);
  KeypointSet out;
  out.bbox_score = bbox_score;
  double total = 0;
  for (int k = 0; k < m.joints; ++k) {
    const Peak p = locate_peak(m.map(k), m.height, m.width, cfg);
    const Point img = h.to_image.apply({p.x, p.y});
    out.joints.push_back(Joint{img.x, img.y, p.score, 2});
    total += p.score;
  }
  out.score = m.joints > 0 ? total / m.joints * bbox_score : 0.0;
  return out;
}

}  // namespace rsn
