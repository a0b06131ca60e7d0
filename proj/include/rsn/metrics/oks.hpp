#pragma once

#include <span>

#include "rsn/codec/joints.hpp"

namespace rsn {

/// Object keypoint similarity: mean over the ground truth's labeled joints
/// of exp(-d^2 / (2 s^2 k^2)) with s^2 = `area` and k = 2 * sigma.
/// Throws on a non-positive area, a ground truth with no labeled joint, or
/// mismatched joint counts.
double oks(const KeypointSet& pred, const KeypointSet& gt, double area, std::span<const double> sigmas);

}  // namespace rsn
