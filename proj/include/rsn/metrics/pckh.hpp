#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rsn/codec/joints.hpp"

namespace rsn {

struct PckSample {
  std::vector<Joint> pred;
  std::vector<Joint> gt;  // joints with visibility 0 are not scored
  /// Normalizing length: head segment for PCKh, box size for PCK. Samples
  /// without one (or with a non-positive one) are skipped and counted.
  std::optional<double> norm;
};

struct PckReport {
  double threshold = 0.5;
  /// Per-joint hit rate; empty when no sample labels that joint.
  std::vector<std::optional<double>> per_joint;
  std::vector<int> labeled;  // scored occurrences per joint
  double mean = 0;            // mean of the per-joint rates that exist
  double overall = 0;         // hits / scored joints, pooled across joints
  int skipped = 0;
};

/// A joint is correct iff its distance is <= threshold * norm (closed
/// boundary). PCKh@0.5 is `pck(samples, 0.5)` with head-segment norms.
PckReport pck(std::span<const PckSample> samples, double threshold);

/// Head segment length for MPII-style annotations: 0.6 times the diagonal
/// of the head box.
double head_segment(const Box& head_box);

}  // namespace rsn
