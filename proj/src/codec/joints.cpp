#include "rsn/codec/joints.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rsn {

int KeypointSet::labeled() const {
  int n = 0;
  for (const Joint& j : joints) n += j.visibility > 0;
  return n;
}

const FlipPairs& coco_flip_pairs() {
  static const FlipPairs p = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
  return p;
}

const FlipPairs& mpii_flip_pairs() {
  // 0 r-ankle 1 r-knee 2 r-hip 3 l-hip 4 l-knee 5 l-ankle ... 10 r-wrist .. 15 l-wrist
  static const FlipPairs p = {{0, 5}, {1, 4}, {2, 3}, {10, 15}, {11, 14}, {12, 13}};
  return p;
}

FlipPairs load_flip_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open flip-pair file '" + path.string() + "'");
  FlipPairs out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    int a = 0, b = 0;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected two joint indices");
    out.emplace_back(a, b);
  }
  return out;
}

FlipPairs resolve_flip_pairs(std::string_view name_or_path) {
  if (name_or_path == "coco") return coco_flip_pairs();
  if (name_or_path == "mpii") return mpii_flip_pairs();
  if (name_or_path == "none") return {};
  return load_flip_pairs(std::filesystem::path(name_or_path));
}

std::vector<int> flip_permutation(const FlipPairs& pairs, int joints) {
  std::vector<int> perm(static_cast<std::size_t>(joints));
  std::vector<bool> used(static_cast<std::size_t>(joints), false);
  for (int i = 0; i < joints; ++i) perm[i] = i;
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= joints || b >= joints) {
      throw std::invalid_argument("flip pair (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range for " +
                                  std::to_string(joints) + " joints");
    }
    if (used[a] || used[b] || a == b) {
      throw std::invalid_argument("flip pairs are not an involution: joint " + std::to_string(used[a] ? a : b) +
                                  " is paired twice");
    }
    used[a] = used[b] = true;
    perm[a] = b;
    perm[b] = a;
  }
  return perm;
}

const std::array<double, kCocoJoints>& coco_sigmas() {
  static const std::array<double, kCocoJoints> s = {.026, .025, .025, .035, .035, .079, .079, .072, .072,
                                                    .062, .062, .107, .107, .087, .087, .089, .089};
  return s;
}

std::vector<double> load_sigmas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sigma file '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v = 0;
    while (ss >> v) {
      if (!(v > 0)) throw std::runtime_error("sigma file '" + path.string() + "': constants must be positive");
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace rsn
