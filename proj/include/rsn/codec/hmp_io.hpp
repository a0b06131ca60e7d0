#pragma once

// Heatmap dump:
//   "HMP1" | K u32 | H u32 | W u32 | K*H*W float32 | 6 float64 (heatmap -> image affine)
// Little-endian throughout.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "rsn/codec/heatmap.hpp"

namespace rsn {

class HeatmapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_hmp(std::ostream& out, const HeatmapStack& h);
HeatmapStack read_hmp(std::istream& in);
void save_hmp(const std::filesystem::path& path, const HeatmapStack& h);
HeatmapStack load_hmp(const std::filesystem::path& path);

}  // namespace rsn
