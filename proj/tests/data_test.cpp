#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rsn/codec/heatmap.hpp"
#include "rsn/data/augment.hpp"
#include "rsn/data/coco.hpp"
#include "rsn/data/image.hpp"
#include "rsn/data/synth.hpp"
#include "support.hpp"

using namespace rsn;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("rsn_data_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("synthetic samples are deterministic per (seed, index)") {
  const SynthSample a = synth_sample(99, 5);
  const SynthSample b = synth_sample(99, 5);
  CHECK(a.image.data == b.image.data);
  for (int j = 0; j < kCocoJoints; ++j) {
    CHECK(a.pose.joints[j].x == b.pose.joints[j].x);
    CHECK(a.pose.joints[j].y == b.pose.joints[j].y);
  }
  CHECK(synth_sample(99, 6).image.data != a.image.data);
  CHECK(synth_sample(100, 5).image.data != a.image.data);
  // generating as part of a dataset gives the same sample
  const SynthDataset d = synth_generate(99, 7);
  CHECK(d.images[5].data == a.image.data);
}

TEST_CASE("synthetic joints are inside the canvas and visible") {
  for (const SynthConfig cfg : {SynthConfig{}, SynthConfig{96, 128, 0.1}, SynthConfig{40, 300, 0.0}}) {
    for (int i = 0; i < 60; ++i) {
      const SynthSample s = synth_sample(3, i, cfg);
      REQUIRE(s.pose.joints.size() == kCocoJoints);
      for (const Joint& j : s.pose.joints) {
        CHECK(j.visibility == 2);
        CHECK(j.x >= 0);
        CHECK(j.y >= 0);
        CHECK(j.x <= cfg.width - 1);
        CHECK(j.y <= cfg.height - 1);
      }
      CHECK(s.pose.bbox.w > 0);
      CHECK(s.pose.bbox.h > 0);
      // the figure faces the viewer: its left side is drawn on the image right
      CHECK(s.pose.joints[5].x > s.pose.joints[6].x);
    }
  }
  CHECK_THROWS(synth_generate(1, 0));
}

TEST_CASE("generated annotations round trip through the COCO reader") {
  const SynthDataset d = synth_generate(4, 6);
  std::stringstream ss;
  write_coco_annotations(ss, d.annotations);
  const CocoDataset back = read_coco_annotations(ss);
  REQUIRE(back.annotations.size() == 6);
  CHECK(back.keypoint_names == d.annotations.keypoint_names);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& a = d.annotations.annotations[i];
    const auto& b = back.annotations[i];
    CHECK(b.area == a.area);
    CHECK(b.pose.bbox.x == a.pose.bbox.x);
    CHECK(b.pose.bbox.h == a.pose.bbox.h);
    for (int j = 0; j < kCocoJoints; ++j) {
      CHECK(b.pose.joints[j].x == a.pose.joints[j].x);
      CHECK(b.pose.joints[j].y == a.pose.joints[j].y);
      CHECK(b.pose.joints[j].visibility == a.pose.joints[j].visibility);
    }
  }
}

TEST_CASE("dataset directory: write and load") {
  const auto dir = scratch_dir("dir");
  const SynthDataset d = synth_generate(11, 3, SynthConfig{64, 48, 0.2});
  write_dataset(dir, d);
  const DatasetIndex idx = load_coco_annotations(dir / "annotations.json");
  REQUIRE(idx.entries.size() == 3);
  const Image img = load_pnm(idx.entries[1].image_path);
  CHECK(img.width == 64);
  CHECK(img.height == 48);
  CHECK(img.channels == 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(img.data[i] - std::clamp(d.images[1].data[i], 0.f, 1.f)) <= 0.5f / 255 + 1e-6f);
  std::filesystem::remove_all(dir);
}

TEST_CASE("COCO ingestion: minimal file, unlabeled and crowd annotations") {
  const auto dir = scratch_dir("coco");
  {
    std::ofstream out(dir / "ann.json");
    out << R"({"images":[{"id":3,"file_name":"x.ppm","width":10,"height":10}],
               "annotations":[{"id":1,"image_id":3,"keypoints":[1,1,2,2,2,1],"bbox":[0,0,5,5]},
                              {"id":2,"image_id":3,"keypoints":[0,0,0,0,0,0],"bbox":[0,0,5,5]},
                              {"id":3,"image_id":3,"keypoints":[1,1,2,2,2,1],"bbox":[0,0,5,5],"iscrowd":1}]})";
  }
  const DatasetIndex idx = load_coco_annotations(dir / "ann.json");
  CHECK(idx.entries.size() == 2);
  CHECK(idx.skipped_crowd == 1);
  CHECK(idx.entries[0].image_path == dir / "x.ppm");
  CHECK(idx.entries[0].annotation.area == 25);
  // all-zero visibility is kept and masked out of the loss
  const KeypointSet& hidden = idx.entries[1].annotation.pose;
  CHECK(hidden.labeled() == 0);
  const Targets t = encode_targets(hidden, 8, 8);
  for (float m : t.mask) CHECK(m == 0.f);
  std::filesystem::remove_all(dir);
}

TEST_CASE("PNM round trip and errors") {
  std::mt19937_64 rng(1);
  Image img(3, 5, 7);
  for (float& v : img.data) v = static_cast<float>(test::rand_int(rng, 0, 255)) / 255.f;
  std::stringstream ss;
  write_pnm(ss, img);
  const Image back = read_pnm(ss);
  CHECK(back.data == img.data);
  Image gray(1, 2, 3, 0.5f);
  std::stringstream gs;
  write_pnm(gs, gray);
  CHECK(read_pnm(gs).channels == 1);
  std::stringstream bad("P3\n1 1\n255\n0 0 0");
  CHECK_THROWS_AS(read_pnm(bad), ImageError);
  std::stringstream cut("P6\n4 4\n255\nabc");
  CHECK_THROWS_AS(read_pnm(cut), ImageError);
}

TEST_CASE("augment: identity parameters reduce to the crop") {
  const SynthSample s = synth_sample(2, 0);
  const Sample out = make_sample(s.image, s.pose, AugmentParams{}, 96, 128, coco_flip_pairs());
  const Affine crop = crop_transform(s.pose.bbox, 96, 128);
  for (int i = 0; i < 6; ++i) CHECK(out.crop_from_image.m[i] == crop.m[i]);
  for (int j = 0; j < kCocoJoints; ++j) {
    const Point p = crop.apply({s.pose.joints[j].x, s.pose.joints[j].y});
    CHECK(out.pose.joints[j].x == doctest::Approx(p.x));
    CHECK(out.pose.joints[j].y == doctest::Approx(p.y));
    CHECK(out.pose.joints[j].visibility == 2);
  }
  CHECK(!out.flipped);
}

TEST_CASE("augment: flipping twice restores joint labels") {
  const SynthSample s = synth_sample(2, 1);
  const FlipPairs& pairs = coco_flip_pairs();
  const KeypointSet twice = swap_pairs(swap_pairs(s.pose, pairs), pairs);
  for (int j = 0; j < kCocoJoints; ++j) CHECK(twice.joints[j].x == s.pose.joints[j].x);

  // a flipped crop mirrors the unflipped one and swaps the labels
  AugmentParams flip;
  flip.flip = true;
  const Sample a = make_sample(s.image, s.pose, AugmentParams{}, 96, 128, pairs);
  const Sample b = make_sample(s.image, s.pose, flip, 96, 128, pairs);
  const auto perm = flip_permutation(pairs, kCocoJoints);
  for (int j = 0; j < kCocoJoints; ++j) {
    CHECK(b.pose.joints[j].x == doctest::Approx(95 - a.pose.joints[perm[j]].x));
    CHECK(b.pose.joints[j].y == doctest::Approx(a.pose.joints[perm[j]].y));
  }
  for (int y = 0; y < 128; y += 7)
    for (int x = 0; x < 96; x += 5) CHECK(b.image.at(1, y, x) == doctest::Approx(a.image.at(1, y, 95 - x)).epsilon(1e-5));
}

TEST_CASE("property: augmented joints agree with rendered markers") {
  std::mt19937_64 rng(13);
  const AugmentConfig cfg;
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    // dark canvas; each joint gets its own bright disc in a separate render
    Image img(1, 120, 100, 0.f);
    KeypointSet pose;
    for (int j = 0; j < 4; ++j) {
      const int x = test::rand_int(rng, 20, 80), y = test::rand_int(rng, 20, 100);
      pose.joints.push_back({static_cast<double>(x), static_cast<double>(y), 1, 2});
    }
    pose.bbox = {15, 15, 70, 90};
    const AugmentParams p = sample_augment(rng, cfg);
    CHECK(std::abs(p.rotation) <= 45);
    CHECK(p.scale >= 0.7);
    CHECK(p.scale <= 1.35);
    for (int j = 0; j < 4; ++j) {
      Image one = img;
      draw_disc(one, pose.joints[j].x, pose.joints[j].y, 1.5, {1.f});
      const Sample s = make_sample(one, pose, p, 96, 128, {});
      REQUIRE(s.pose.joints.size() == 4);
      if (s.pose.joints[j].visibility == 0) continue;
      // intensity-weighted centroid of the warped marker
      double sx = 0, sy = 0, sw = 0;
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 96; ++x) {
          const double w = s.image.at(0, y, x);
          sx += w * x, sy += w * y, sw += w;
        }
      REQUIRE(sw > 0);
      CHECK(std::hypot(sx / sw - s.pose.joints[j].x, sy / sw - s.pose.joints[j].y) <= 1.0);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("augment keeps joint count and in-crop visibility") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const SynthSample s = synth_sample(8, i);
    const AugmentParams p = sample_augment(rng, AugmentConfig{});
    const Sample out = make_sample(s.image, s.pose, p, 96, 128, coco_flip_pairs());
    REQUIRE(out.pose.joints.size() == kCocoJoints);
    for (const Joint& j : out.pose.joints) {
      const bool inside = j.x >= 0 && j.y >= 0 && j.x <= 95 && j.y <= 127;
      CHECK(j.visibility == (inside ? 2 : 0));
    }
  }
  AugmentConfig off;
  off.enabled = false;
  const AugmentParams none = sample_augment(rng, off);
  CHECK(none.rotation == 0);
  CHECK(none.scale == 1);
  CHECK(!none.flip);
}

TEST_CASE("epoch order is a pure permutation of (seed, epoch)") {
  const auto a = epoch_order(5, 2, 50);
  CHECK(a == epoch_order(5, 2, 50));
  CHECK(a != epoch_order(5, 3, 50));
  CHECK(a != epoch_order(6, 2, 50));
  CHECK(std::set<int>(a.begin(), a.end()).size() == 50);
}
