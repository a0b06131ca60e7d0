#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

namespace rsn {

struct Joint {
  double x = 0;
  double y = 0;
  double score = 0;
  int visibility = 0;  // 0 unlabeled, 1 labeled but occluded, 2 visible
};

struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
};

struct KeypointSet {
  std::vector<Joint> joints;
  Box bbox;
  double bbox_score = 1.0;
  double score = 0.0;  // pose score after decoding
  int labeled() const;
};

inline constexpr int kCocoJoints = 17;
inline constexpr int kMpiiJoints = 16;

using FlipPairs = std::vector<std::pair<int, int>>;

const FlipPairs& coco_flip_pairs();
const FlipPairs& mpii_flip_pairs();
/// "coco", "mpii", "none" (identity) or a file of "a b" lines.
FlipPairs resolve_flip_pairs(std::string_view name_or_path);
FlipPairs load_flip_pairs(const std::filesystem::path& path);

/// Channel permutation for `pairs` over K joints. Throws when a joint
/// appears twice or out of range, i.e. when the pairs do not describe an
/// involution.
std::vector<int> flip_permutation(const FlipPairs& pairs, int joints);

/// COCO per-joint OKS constants (nose, eyes, ears, shoulders, elbows,
/// wrists, hips, knees, ankles).
const std::array<double, kCocoJoints>& coco_sigmas();
std::vector<double> load_sigmas(const std::filesystem::path& path);

}  // namespace rsn
