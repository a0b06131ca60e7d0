#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rsn/codec/joints.hpp"
#include "rsn/codec/transform.hpp"
#include "rsn/data/image.hpp"

namespace rsn {

struct AugmentConfig {
  bool enabled = true;
  double max_rotation = 45.0;  // degrees, symmetric
  double min_scale = 0.7;
  double max_scale = 1.35;
  double flip_probability = 0.5;
};

struct AugmentParams {
  double rotation = 0.0;
  double scale = 1.0;
  bool flip = false;
};

AugmentParams sample_augment(std::mt19937_64& rng, const AugmentConfig& cfg);

struct Sample {
  Image image;         // network input crop
  KeypointSet pose;    // crop coordinates
  long long source_id = 0;
  Affine crop_from_image;
  bool flipped = false;
};

/// Crops `pose.bbox` out of `img` at `out_w` x `out_h` with the given
/// rotation and scale, optionally mirrors the crop (swapping paired joint
/// labels), and maps the joints along. Joints that land outside the crop
/// become unlabeled. The box becomes the crop-space hull of the original
/// box.
Sample make_sample(const Image& img, const KeypointSet& pose, const AugmentParams& params, int out_w, int out_h,
                   const FlipPairs& pairs, long long source_id = 0);

/// Relabels a mirrored pose: joint k takes the coordinates of its partner.
KeypointSet swap_pairs(const KeypointSet& pose, const FlipPairs& pairs);

/// Visit order for one epoch; a pure function of (seed, epoch).
std::vector<int> epoch_order(std::uint64_t seed, int epoch, int n);

}  // namespace rsn
