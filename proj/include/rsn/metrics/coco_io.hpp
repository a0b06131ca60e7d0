#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsn/codec/joints.hpp"
#include "rsn/metrics/average_precision.hpp"

namespace rsn {

class CocoFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CocoImage {
  long long id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CocoAnnotation {
  long long id = 0;
  long long image_id = 0;
  int category_id = 1;
  KeypointSet pose;  // joints and bbox
  int num_keypoints = 0;
  double area = 0;
  bool iscrowd = false;
};

struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<std::string> keypoint_names;
  const CocoImage* image(long long id) const;
};

CocoDataset read_coco_annotations(std::istream& in, const std::string& source = "<stream>");
CocoDataset read_coco_annotations(const std::filesystem::path& path);
void write_coco_annotations(std::ostream& out, const CocoDataset& d);

/// Result files are a JSON array of {image_id, category_id, keypoints,
/// score}. Detection ids are the record positions.
std::vector<Detection> read_coco_results(std::istream& in, const std::string& source = "<stream>");
std::vector<Detection> read_coco_results(const std::filesystem::path& path);
void write_coco_results(std::ostream& out, std::span<const Detection> dets);

struct GroundTruthSet {
  std::vector<GroundTruth> gts;
  int skipped_crowd = 0;
  int skipped_unlabeled = 0;
};

/// Evaluation ground truths: crowd annotations and annotations without a
/// labeled joint are dropped and counted.
GroundTruthSet ground_truths(const CocoDataset& d);

}  // namespace rsn
