#pragma once

#include <filesystem>
#include <vector>

#include "rsn/data/image.hpp"
#include "rsn/metrics/coco_io.hpp"

namespace rsn {

/// One training/evaluation instance: an annotation joined with its image.
struct DatasetEntry {
  CocoImage image;
  CocoAnnotation annotation;
  std::filesystem::path image_path;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
  int skipped_crowd = 0;
};

/// Joins images and annotations. Image files resolve against `image_root`
/// (default: the annotation file's directory). Crowd annotations are
/// skipped and counted; annotations without labeled joints are kept (their
/// loss mask is all zero).
DatasetIndex load_coco_annotations(const std::filesystem::path& path, std::filesystem::path image_root = {});
DatasetIndex index_dataset(const CocoDataset& d, const std::filesystem::path& image_root);

}  // namespace rsn
