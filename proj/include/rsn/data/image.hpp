#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "rsn/codec/transform.hpp"

namespace rsn {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar float image, (channels, height, width), values in [0, 1]. Pixel
/// (x, y) has its center at coordinate (x, y).
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

/// Binary PPM (P6, 3 channels) or PGM (P5, 1 channel), 8 bits per sample.
void write_pnm(std::ostream& out, const Image& img);
Image read_pnm(std::istream& in);
void save_pnm(const std::filesystem::path& path, const Image& img);
Image load_pnm(const std::filesystem::path& path);

/// Output pixel p samples `src` at `src_from_out.apply(p)` bilinearly;
/// samples outside the source read 0.
Image warp_affine(const Image& src, const Affine& src_from_out, int out_w, int out_h);

/// Filled disc and thick segment with the given per-channel color.
void draw_disc(Image& img, double cx, double cy, double radius, const std::vector<float>& color);
void draw_segment(Image& img, double x0, double y0, double x1, double y1, double thickness,
                  const std::vector<float>& color);

}  // namespace rsn
