#include "rsn/codec/hmp_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace rsn {

namespace {

template <typename U>
U little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    std::reverse(b, b + sizeof(U));
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

template <typename U>
void put(std::ostream& out, U v) {
  v = little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U take(std::istream& in) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw HeatmapFormatError("heatmap file truncated");
  return little(v);
}

constexpr std::uint32_t kMaxExtent = 1u << 16;

}  // namespace

void write_hmp(std::ostream& out, const HeatmapStack& h) {
  out.write("HMP1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.joints));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.width));
  for (float v : h.values) put(out, std::bit_cast<std::uint32_t>(v));
  for (double v : h.to_image.m) put(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw HeatmapFormatError("failed writing heatmap file");
}

HeatmapStack read_hmp(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HMP1", 4) != 0) throw HeatmapFormatError("not an HMP1 heatmap file");
  const auto k = take<std::uint32_t>(in), hh = take<std::uint32_t>(in), ww = take<std::uint32_t>(in);
  if (k == 0 || hh == 0 || ww == 0 || k > kMaxExtent || hh > kMaxExtent || ww > kMaxExtent) {
    throw HeatmapFormatError("heatmap file has implausible extents " + std::to_string(k) + "x" + std::to_string(hh) +
                             "x" + std::to_string(ww));
  }
  HeatmapStack h(static_cast<int>(k), static_cast<int>(hh), static_cast<int>(ww));
  for (float& v : h.values) v = std::bit_cast<float>(take<std::uint32_t>(in));
  for (double& v : h.to_image.m) v = std::bit_cast<double>(take<std::uint64_t>(in));
  return h;
}

void save_hmp(const std::filesystem::path& path, const HeatmapStack& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HeatmapFormatError("cannot open '" + path.string() + "' for writing");
  write_hmp(out, h);
}

HeatmapStack load_hmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HeatmapFormatError("cannot open '" + path.string() + "'");
  return read_hmp(in);
}

}  // namespace rsn
