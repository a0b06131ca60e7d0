#include "rsn/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace rsn {

namespace {

enum J { nose, l_eye, r_eye, l_ear, r_ear, l_sho, r_sho, l_elb, r_elb, l_wri, r_wri, l_hip, r_hip, l_kne, r_kne, l_ank, r_ank };

const std::vector<std::string>& coco_joint_names() {
  static const std::vector<std::string> n = {"nose",          "left_eye",    "right_eye",  "left_ear",   "right_ear",
                                             "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
                                             "left_wrist",    "right_wrist", "left_hip",   "right_hip",  "left_knee",
                                             "right_knee",    "left_ankle",  "right_ankle"};
  return n;
}

struct V {
  double x, y;
};
V operator+(V a, V b) { return {a.x + b.x, a.y + b.y}; }
V operator*(double s, V a) { return {s * a.x, s * a.y}; }
V at_angle(double rad) { return {std::sin(rad), std::cos(rad)}; }  // 0 = straight down (image y grows downward)

double deg(double d) { return d * std::numbers::pi / 180.0; }

std::vector<V> pose_in_body_frame(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const double T = range(0.9, 1.1);
  const double lean = deg(range(-20, 20));
  const V down = at_angle(lean), up = -1.0 * down, side{down.y, -down.x};  // side points to image right

  std::vector<V> p(kCocoJoints);
  const V hip{0, 0};
  const V neck = hip + T * up;
  p[l_hip] = hip + 0.18 * T * side;
  p[r_hip] = hip + -0.18 * T * side;
  p[l_sho] = neck + 0.25 * T * side;
  p[r_sho] = neck + -0.25 * T * side;
  const V head = neck + 0.32 * T * up;
  p[nose] = head + 0.02 * T * down;
  p[l_eye] = head + 0.07 * T * side + 0.06 * T * up;
  p[r_eye] = head + -0.07 * T * side + 0.06 * T * up;
  p[l_ear] = head + 0.14 * T * side + 0.03 * T * up;
  p[r_ear] = head + -0.14 * T * side + 0.03 * T * up;

  auto limb = [&](int root, int mid, int end, double a1, double l1, double bend, double l2) {
    p[mid] = p[root] + l1 * T * at_angle(lean + a1);
    p[end] = p[mid] + l2 * T * at_angle(lean + a1 + bend);
  };
  // angles measured from straight down, positive toward image right
  limb(l_sho, l_elb, l_wri, deg(range(-20, 150)), range(0.38, 0.48), deg(range(-120, 30)), range(0.33, 0.43));
  limb(r_sho, r_elb, r_wri, -deg(range(-20, 150)), range(0.38, 0.48), -deg(range(-120, 30)), range(0.33, 0.43));
  limb(l_hip, l_kne, l_ank, deg(range(-10, 45)), range(0.45, 0.55), deg(range(-60, 10)), range(0.42, 0.52));
  limb(r_hip, r_kne, r_ank, -deg(range(-10, 45)), range(0.45, 0.55), -deg(range(-60, 10)), range(0.42, 0.52));
  return p;
}

struct Bone {
  int a, b;
  int color;  // 0 center, 1 left, 2 right
};

const std::vector<Bone>& bones() {
  static const std::vector<Bone> b = {{l_sho, r_sho, 0}, {l_hip, r_hip, 0}, {l_sho, l_hip, 1}, {r_sho, r_hip, 2},
                                      {l_sho, l_elb, 1}, {l_elb, l_wri, 1}, {r_sho, r_elb, 2}, {r_elb, r_wri, 2},
                                      {l_hip, l_kne, 1}, {l_kne, l_ank, 1}, {r_hip, r_kne, 2}, {r_kne, r_ank, 2},
                                      {l_ear, l_eye, 1}, {r_ear, r_eye, 2}, {l_eye, nose, 1}, {r_eye, nose, 2}};
  return b;
}

}  // namespace

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

SynthSample synth_sample(std::uint64_t seed, int index, const SynthConfig& cfg) {
  if (cfg.width < 32 || cfg.height < 32) throw std::invalid_argument("synthetic canvas must be at least 32x32");
  std::mt19937_64 rng = sample_rng(seed, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> u(0, 1);

  const double margin = 4;
  std::vector<V> body;
  double scale = 0;
  V offset{};
  for (int attempt = 0;; ++attempt) {
    body = pose_in_body_frame(rng);
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (const V& p : body) x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    const double fit = std::min((cfg.width - 2 * margin) / (x1 - x0), (cfg.height - 2 * margin) / (y1 - y0));
    scale = fit * (0.55 + 0.4 * u(rng));
    if (attempt > 50) scale = fit * 0.5;
    const double room_x = cfg.width - 2 * margin - scale * (x1 - x0), room_y = cfg.height - 2 * margin - scale * (y1 - y0);
    if (room_x >= 0 && room_y >= 0) {
      offset = {margin + room_x * u(rng) - scale * x0, margin + room_y * u(rng) - scale * y0};
      break;
    }
  }

  SynthSample s{Image(3, cfg.height, cfg.width), {}};
  for (int c = 0; c < 3; ++c) {
    const float tint = static_cast<float>(0.1 + 0.2 * u(rng));
    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x) s.image.at(c, y, x) = tint + static_cast<float>(cfg.noise * u(rng));
  }

  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (int j = 0; j < kCocoJoints; ++j) {
    const V p = offset + scale * body[j];
    s.pose.joints.push_back({p.x, p.y, 1.0, 2});
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }

  const std::vector<std::vector<float>> palette = {{0.95f, 0.95f, 0.95f}, {1.0f, 0.55f, 0.1f}, {0.2f, 0.6f, 1.0f}};
  const double thick = std::max(2.0, 0.07 * scale);
  for (const Bone& b : bones()) {
    const Joint& a = s.pose.joints[b.a];
    const Joint& c = s.pose.joints[b.b];
    draw_segment(s.image, a.x, a.y, c.x, c.y, thick, palette[b.color]);
  }
  const Joint& nz = s.pose.joints[nose];
  draw_disc(s.image, nz.x, nz.y - 0.05 * scale, 0.09 * scale, {0.9f, 0.85f, 0.7f});
  for (const Joint& j : s.pose.joints) draw_disc(s.image, j.x, j.y, std::max(1.5, 0.035 * scale), {1.0f, 1.0f, 0.3f});

  const double pad = 0.08 * std::max(x1 - x0, y1 - y0);
  const double bx = std::max(0.0, x0 - pad), by = std::max(0.0, y0 - pad);
  s.pose.bbox = {bx, by, std::min(cfg.width - 1.0, x1 + pad) - bx, std::min(cfg.height - 1.0, y1 + pad) - by};
  return s;
}

SynthDataset synth_generate(std::uint64_t seed, int n, const SynthConfig& cfg) {
  if (n < 1) throw std::invalid_argument("synthetic dataset size must be >= 1");
  SynthDataset d;
  d.annotations.keypoint_names = coco_joint_names();
  for (int i = 0; i < n; ++i) {
    SynthSample s = synth_sample(seed, i, cfg);
    char name[32];
    std::snprintf(name, sizeof name, "images/%06d.ppm", i);
    d.annotations.images.push_back({i + 1, name, cfg.width, cfg.height});
    CocoAnnotation a;
    a.id = i + 1;
    a.image_id = i + 1;
    a.pose = std::move(s.pose);
    a.num_keypoints = kCocoJoints;
    a.area = a.pose.bbox.w * a.pose.bbox.h;
    d.annotations.annotations.push_back(std::move(a));
    d.images.push_back(std::move(s.image));
  }
  return d;
}

void write_dataset(const std::filesystem::path& dir, const SynthDataset& d) {
  std::filesystem::create_directories(dir / "images");
  for (std::size_t i = 0; i < d.images.size(); ++i) save_pnm(dir / d.annotations.images[i].file_name, d.images[i]);
  std::ofstream out(dir / "annotations.json");
  if (!out) throw std::runtime_error("cannot write '" + (dir / "annotations.json").string() + "'");
  write_coco_annotations(out, d.annotations);
}

}  // namespace rsn
