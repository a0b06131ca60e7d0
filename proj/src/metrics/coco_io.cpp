#include "rsn/metrics/coco_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace rsn {

using nlohmann::json;

namespace {

std::vector<Joint> parse_keypoints(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() % 3 != 0) throw CocoFormatError(where + ": keypoints must be a flat array of triples");
  std::vector<Joint> out;
  for (std::size_t i = 0; i < arr.size(); i += 3) {
    Joint j;
    j.x = arr[i].get<double>();
    j.y = arr[i + 1].get<double>();
    const double v = arr[i + 2].get<double>();
    j.visibility = static_cast<int>(v);
    j.score = v > 0 ? 1.0 : 0.0;
    if (!std::isfinite(j.x) || !std::isfinite(j.y)) throw CocoFormatError(where + ": non-finite keypoint coordinate");
    out.push_back(j);
  }
  return out;
}

json keypoints_json(const std::vector<Joint>& joints, bool as_result) {
  json arr = json::array();
  for (const Joint& j : joints) {
    arr.push_back(j.x);
    arr.push_back(j.y);
    if (as_result) arr.push_back(j.score);
    else arr.push_back(j.visibility);
  }
  return arr;
}

json parse_json(std::istream& in, const std::string& source) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CocoFormatError(source + ": " + e.what());
  }
}

}  // namespace

const CocoImage* CocoDataset::image(long long id) const {
  for (const CocoImage& im : images)
    if (im.id == id) return &im;
  return nullptr;
}

CocoDataset read_coco_annotations(std::istream& in, const std::string& source) {
  const json doc = parse_json(in, source);
  if (!doc.is_object()) throw CocoFormatError(source + ": top level must be an object");
  CocoDataset d;
  try {
    for (std::size_t i = 0; i < doc.at("images").size(); ++i) {
      const json& r = doc["images"][i];
      const std::string where = source + ": images[" + std::to_string(i) + "]";
      try {
        d.images.push_back({r.at("id").get<long long>(), r.value("file_name", std::string()), r.value("width", 0),
                            r.value("height", 0)});
      } catch (const json::exception& e) {
        throw CocoFormatError(where + ": " + e.what());
      }
    }
    std::size_t K = 0;
    for (std::size_t i = 0; i < doc.at("annotations").size(); ++i) {
      const json& r = doc["annotations"][i];
      const std::string where = source + ": annotations[" + std::to_string(i) + "]";
      try {
        CocoAnnotation a;
        a.id = r.at("id").get<long long>();
        a.image_id = r.at("image_id").get<long long>();
        a.category_id = r.value("category_id", 1);
        a.pose.joints = parse_keypoints(r.at("keypoints"), where);
        if (K == 0) K = a.pose.joints.size();
        if (a.pose.joints.size() != K) throw CocoFormatError(where + ": keypoint count differs from earlier records");
        const json& b = r.at("bbox");
        if (!b.is_array() || b.size() != 4) throw CocoFormatError(where + ": bbox must have four numbers");
        a.pose.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        a.num_keypoints = r.value("num_keypoints", a.pose.labeled());
        a.area = r.value("area", a.pose.bbox.w * a.pose.bbox.h);
        a.iscrowd = r.value("iscrowd", 0) != 0;
        if (!d.image(a.image_id)) throw CocoFormatError(where + ": unknown image_id " + std::to_string(a.image_id));
        d.annotations.push_back(std::move(a));
      } catch (const json::exception& e) {
        throw CocoFormatError(where + ": " + e.what());
      }
    }
    if (doc.contains("categories")) {
      for (const json& c : doc["categories"])
        if (c.contains("keypoints")) d.keypoint_names = c["keypoints"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw CocoFormatError(source + ": " + e.what());
  }
  return d;
}

CocoDataset read_coco_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CocoFormatError("cannot open '" + path.string() + "'");
  return read_coco_annotations(in, path.string());
}

void write_coco_annotations(std::ostream& out, const CocoDataset& d) {
  json doc;
  doc["images"] = json::array();
  for (const CocoImage& im : d.images)
    doc["images"].push_back({{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
  doc["annotations"] = json::array();
  for (const CocoAnnotation& a : d.annotations) {
    const Box& b = a.pose.bbox;
    doc["annotations"].push_back({{"id", a.id},
                                  {"image_id", a.image_id},
                                  {"category_id", a.category_id},
                                  {"keypoints", keypoints_json(a.pose.joints, false)},
                                  {"num_keypoints", a.num_keypoints},
                                  {"bbox", {b.x, b.y, b.w, b.h}},
                                  {"area", a.area},
                                  {"iscrowd", a.iscrowd ? 1 : 0}});
  }
  json cat = {{"id", 1}, {"name", "person"}};
  if (!d.keypoint_names.empty()) cat["keypoints"] = d.keypoint_names;
  doc["categories"] = json::array({cat});
  out << doc.dump(1) << "\n";
}

std::vector<Detection> read_coco_results(std::istream& in, const std::string& source) {
  const json doc = parse_json(in, source);
  if (!doc.is_array()) throw CocoFormatError(source + ": results must be a JSON array");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = source + ": results[" + std::to_string(i) + "]";
    try {
      Detection d;
      d.id = static_cast<long long>(i);
      d.image_id = doc[i].at("image_id").get<long long>();
      d.pose.joints = parse_keypoints(doc[i].at("keypoints"), where);
      for (std::size_t k = 0; k < d.pose.joints.size(); ++k) {
        d.pose.joints[k].score = doc[i]["keypoints"][3 * k + 2].get<double>();
        d.pose.joints[k].visibility = 2;
      }
      d.score = doc[i].at("score").get<double>();
      d.pose.score = d.score;
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw CocoFormatError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<Detection> read_coco_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CocoFormatError("cannot open '" + path.string() + "'");
  return read_coco_results(in, path.string());
}

void write_coco_results(std::ostream& out, std::span<const Detection> dets) {
  json doc = json::array();
  for (const Detection& d : dets)
    doc.push_back({{"image_id", d.image_id},
                   {"category_id", 1},
                   {"keypoints", keypoints_json(d.pose.joints, true)},
                   {"score", d.score}});
  out << doc.dump(1) << "\n";
}

GroundTruthSet ground_truths(const CocoDataset& d) {
  GroundTruthSet s;
  for (const CocoAnnotation& a : d.annotations) {
    if (a.iscrowd) {
      ++s.skipped_crowd;
      continue;
    }
    if (a.pose.labeled() == 0) {
      ++s.skipped_unlabeled;
      continue;
    }
    s.gts.push_back({a.id, a.image_id, a.pose, a.area});
  }
  return s;
}

}  // namespace rsn
