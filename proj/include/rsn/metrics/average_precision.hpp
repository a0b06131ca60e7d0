#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rsn/codec/joints.hpp"

namespace rsn {

struct Detection {
  long long id = 0;  // stable id; breaks score ties (lower first)
  long long image_id = 0;
  KeypointSet pose;
  double score = 0;
};

struct GroundTruth {
  long long id = 0;
  long long image_id = 0;
  KeypointSet pose;
  double area = 0;
};

struct APReport {
  std::vector<std::pair<double, double>> per_threshold;  // (OKS threshold, AP)
  double mean_ap = 0;
  double at(double threshold) const;
};

/// 0.50, 0.55, ..., 0.95
std::vector<double> coco_thresholds();

/// Detections sorted by descending score, ties by ascending id.
std::vector<std::size_t> score_order(std::span<const Detection> dets);

/// Per detection (in `score_order`), the index of the matched ground truth
/// or -1. Within each image, each detection in turn takes the unmatched
/// ground truth of highest OKS >= threshold (ties: lowest ground-truth id).
std::vector<int> greedy_match(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                              std::span<const double> sigmas, double threshold);

/// Area under the precision-recall curve with 101-point interpolation, given
/// true/false-positive flags in score order and the number of ground truths.
double interpolated_ap(const std::vector<bool>& tp, std::size_t num_gt);

/// Ground truths without labeled joints must be removed beforehand. With no
/// ground truth at all, AP is 0.
APReport average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                           std::span<const double> sigmas, std::span<const double> thresholds);

}  // namespace rsn
