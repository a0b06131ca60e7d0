#pragma once

#include <array>

#include "rsn/codec/joints.hpp"

namespace rsn {

struct Point {
  double x = 0;
  double y = 0;
};

/// 2x3 affine map: [x', y'] = A [x, y] + t.
struct Affine {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};  // a00 a01 t0 a10 a11 t1

  Point apply(Point p) const { return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]}; }
  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }
  Affine inverse() const;
  static Affine scaling(double sx, double sy);
  static Affine translation(double tx, double ty);
};

/// (a * b).apply(p) == a.apply(b.apply(p))
Affine operator*(const Affine& a, const Affine& b);

inline constexpr double kCropPadding = 1.25;

/// Maps image coordinates into a `out_w` x `out_h` network crop. The box is
/// expanded on its shorter side to the output aspect ratio, padded by
/// `padding`, multiplied by `scale` (values above 1 zoom out), and rotated by
/// `rotation_deg` about its center. Positive angles turn the box's up vector
/// toward its right vector.
Affine crop_transform(const Box& bbox, int out_w, int out_h, double rotation_deg = 0.0, double scale = 1.0,
                      double padding = kCropPadding);

/// Horizontal mirror of a `width`-wide raster: x -> width - 1 - x.
Affine mirror_x(int width);

}  // namespace rsn
