#pragma once

#include <optional>
#include <vector>

#include "rsn/codec/joints.hpp"
#include "rsn/codec/transform.hpp"

namespace rsn {

struct HeatmapStack {
  int joints = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;  // (joints, height, width), row major
  Affine to_image;            // heatmap cell coordinates -> image coordinates

  HeatmapStack() = default;
  HeatmapStack(int k, int h, int w) : joints(k), height(h), width(w), values(static_cast<std::size_t>(k) * h * w, 0.f) {}

  float& at(int k, int y, int x) { return values[(static_cast<std::size_t>(k) * height + y) * width + x]; }
  float at(int k, int y, int x) const { return values[(static_cast<std::size_t>(k) * height + y) * width + x]; }
  float* map(int k) { return values.data() + static_cast<std::size_t>(k) * height * width; }
  const float* map(int k) const { return values.data() + static_cast<std::size_t>(k) * height * width; }
};

inline constexpr double kTargetSigma = 2.0;
inline constexpr int kHeatmapStride = 4;

/// exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2)) over every cell of an
/// h x w map; peak value 1 at the center.
void render_gaussian(float* out, int h, int w, double cx, double cy, double sigma);

struct Targets {
  HeatmapStack heatmaps;
  std::vector<float> mask;  // one entry per joint, 1 when supervised
};

/// Joints are in network-input coordinates; each labeled joint whose rounded
/// heatmap location lies on the map gets a Gaussian centered on that cell.
Targets encode_targets(const KeypointSet& kps, int map_h, int map_w, double sigma = kTargetSigma,
                       int stride = kHeatmapStride);

/// Separable normalized Gaussian blur with reflect-101 borders.
void gaussian_blur(HeatmapStack& h, int kernel = 5, double sigma = 1.0);

/// (h[c] + aligned[perm[c]]) / 2 where `aligned` is already in the
/// original image's orientation.
HeatmapStack swap_average(const HeatmapStack& h, const HeatmapStack& aligned, const FlipPairs& pairs);
/// Same, but `h_flip` is the prediction on the mirrored image and is
/// mirrored back first.
HeatmapStack flip_average(const HeatmapStack& h, const HeatmapStack& h_flip, const FlipPairs& pairs);
HeatmapStack mirror(const HeatmapStack& h);

enum class OffsetMode { unit, full };

struct DecodeConfig {
  bool blur = true;
  int blur_kernel = 5;
  double blur_sigma = 1.0;
  double offset = 0.25;
  OffsetMode offset_mode = OffsetMode::unit;
};

/// Heatmap-cell location of one map's peak after the quarter offset, plus
/// its clamped score. Constant maps decode to the map center with score 0.
struct Peak {
  double x = 0;
  double y = 0;
  double score = 0;
};
Peak locate_peak(const float* map, int h, int w, const DecodeConfig& cfg = {});
/// Plain argmax, first maximum in raster order.
Peak argmax_peak(const float* map, int h, int w);

/// `flipped`, when present, must already be mirrored back to the original
/// orientation; its paired channels are swapped and averaged in.
KeypointSet decode(const HeatmapStack& h, const std::optional<HeatmapStack>& flipped, const FlipPairs& pairs,
                   double bbox_score, const DecodeConfig& cfg = {});

}  // namespace rsn
