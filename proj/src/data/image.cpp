#include "rsn/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace rsn {

void write_pnm(std::ostream& out, const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw ImageError("PNM output needs 1 or 3 channels");
  out << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(img.at(c, y, x), 0.f, 1.f);
        row[static_cast<std::size_t>(x) * img.channels + c] = static_cast<unsigned char>(std::lround(v * 255.f));
      }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw ImageError("failed writing image");
}

namespace {

int read_header_int(std::istream& in) {
  int v = -1;
  for (;;) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    break;
  }
  if (!(in >> v)) throw ImageError("malformed PNM header");
  return v;
}

}  // namespace

Image read_pnm(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || (magic != "P6" && magic != "P5")) throw ImageError("not a binary PPM/PGM image");
  const int w = read_header_int(in), h = read_header_int(in), maxval = read_header_int(in);
  if (w < 1 || h < 1 || w > 1 << 15 || h > 1 << 15) throw ImageError("PNM image has implausible size");
  if (maxval != 255) throw ImageError("only 8-bit PNM images are supported");
  in.get();
  Image img(magic == "P6" ? 3 : 1, h, w);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * img.channels);
  for (int y = 0; y < h; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
      throw ImageError("PNM pixel data truncated");
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) img.at(c, y, x) = row[static_cast<std::size_t>(x) * img.channels + c] / 255.f;
  }
  return img;
}

void save_pnm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot open '" + path.string() + "' for writing");
  write_pnm(out, img);
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image '" + path.string() + "'");
  return read_pnm(in);
}

Image warp_affine(const Image& src, const Affine& src_from_out, int out_w, int out_h) {
  Image out(src.channels, out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const Point p = src_from_out.apply({static_cast<double>(x), static_cast<double>(y)});
      const int x0 = static_cast<int>(std::floor(p.x)), y0 = static_cast<int>(std::floor(p.y));
      const double fx = p.x - x0, fy = p.y - y0;
      for (int c = 0; c < src.channels; ++c) {
        double v = 0;
        for (int dy = 0; dy <= 1; ++dy)
          for (int dx = 0; dx <= 1; ++dx) {
            const int sx = x0 + dx, sy = y0 + dy;
            if (sx < 0 || sy < 0 || sx >= src.width || sy >= src.height) continue;
            v += (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * src.at(c, sy, sx);
          }
        out.at(c, y, x) = static_cast<float>(v);
      }
    }
  return out;
}

void draw_disc(Image& img, double cx, double cy, double radius, const std::vector<float>& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
        for (int c = 0; c < img.channels; ++c) img.at(c, y, x) = color[static_cast<std::size_t>(c) % color.size()];
}

void draw_segment(Image& img, double x0, double y0, double x1, double y1, double thickness,
                  const std::vector<float>& color) {
  const double r = thickness / 2;
  const int xa = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - r)));
  const int xb = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(x0, x1) + r)));
  const int ya = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - r)));
  const int yb = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(y0, y1) + r)));
  const double dx = x1 - x0, dy = y1 - y0, len2 = dx * dx + dy * dy;
  for (int y = ya; y <= yb; ++y)
    for (int x = xa; x <= xb; ++x) {
      const double t = len2 > 0 ? std::clamp(((x - x0) * dx + (y - y0) * dy) / len2, 0.0, 1.0) : 0.0;
      const double px = x0 + t * dx - x, py = y0 + t * dy - y;
      if (px * px + py * py <= r * r)
        for (int c = 0; c < img.channels; ++c) img.at(c, y, x) = color[static_cast<std::size_t>(c) % color.size()];
    }
}

}  // namespace rsn
