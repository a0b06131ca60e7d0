#include "rsn/data/coco.hpp"

namespace rsn {

DatasetIndex index_dataset(const CocoDataset& d, const std::filesystem::path& image_root) {
  DatasetIndex idx;
  for (const CocoAnnotation& a : d.annotations) {
    if (a.iscrowd) {
      ++idx.skipped_crowd;
      continue;
    }
    const CocoImage* im = d.image(a.image_id);
    if (!im) throw CocoFormatError("annotation " + std::to_string(a.id) + " references unknown image " + std::to_string(a.image_id));
    idx.entries.push_back({*im, a, image_root / im->file_name});
  }
  return idx;
}

DatasetIndex load_coco_annotations(const std::filesystem::path& path, std::filesystem::path image_root) {
  if (image_root.empty()) image_root = path.parent_path();
  return index_dataset(read_coco_annotations(path), image_root);
}

}  // namespace rsn
