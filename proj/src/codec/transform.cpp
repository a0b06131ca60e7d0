#include "rsn/codec/transform.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsn {

Affine Affine::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) throw std::domain_error("affine transform is not invertible");
  const double a = m[4] / det, b = -m[1] / det, c = -m[3] / det, d = m[0] / det;
  return Affine{{a, b, -(a * m[2] + b * m[5]), c, d, -(c * m[2] + d * m[5])}};
}

Affine Affine::scaling(double sx, double sy) { return Affine{{sx, 0, 0, 0, sy, 0}}; }
Affine Affine::translation(double tx, double ty) { return Affine{{1, 0, tx, 0, 1, ty}}; }

Affine operator*(const Affine& a, const Affine& b) {
  const auto& x = a.m;
  const auto& y = b.m;
  return Affine{{x[0] * y[0] + x[1] * y[3], x[0] * y[1] + x[1] * y[4], x[0] * y[2] + x[1] * y[5] + x[2],
                 x[3] * y[0] + x[4] * y[3], x[3] * y[1] + x[4] * y[4], x[3] * y[2] + x[4] * y[5] + x[5]}};
}

Affine crop_transform(const Box& bbox, int out_w, int out_h, double rotation_deg, double scale, double padding) {
  if (!(bbox.w > 0) || !(bbox.h > 0) || !std::isfinite(bbox.w) || !std::isfinite(bbox.h)) {
    throw std::invalid_argument("crop box must have positive, finite width and height");
  }
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("crop output size must be positive");
  if (!(scale > 0) || !(padding > 0)) throw std::invalid_argument("crop scale and padding must be positive");

  const double cx = bbox.x + bbox.w / 2, cy = bbox.y + bbox.h / 2;
  const double aspect = static_cast<double>(out_w) / out_h;
  double w = bbox.w, h = bbox.h;
  if (w > aspect * h) h = w / aspect;
  else w = h * aspect;
  w *= padding * scale;

  const double k = out_w / w;  // pixels of crop per pixel of image, equal on both axes
  const double t = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t) * k, s = std::sin(t) * k;
  // x' = R (p - center) * k + out_center
  const double ox = out_w / 2.0, oy = out_h / 2.0;
  return Affine{{c, -s, ox - (c * cx - s * cy), s, c, oy - (s * cx + c * cy)}};
}

Affine mirror_x(int width) { return Affine{{-1, 0, static_cast<double>(width - 1), 0, 1, 0}}; }

}  // namespace rsn
