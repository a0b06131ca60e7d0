#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "rsn/metrics/average_precision.hpp"
#include "rsn/metrics/coco_io.hpp"
#include "rsn/metrics/oks.hpp"
#include "rsn/metrics/pckh.hpp"
#include "ap_oracle.hpp"
#include "support.hpp"

using namespace rsn;
using namespace rsn::test;

namespace {

std::span<const double> sigmas() { return coco_sigmas(); }

// COCO's own arrangement of the formula: e = d^2 / (2 sigma)^2 / area / 2.
double oks_oracle(const KeypointSet& p, const KeypointSet& g, double area) {
  double sum = 0;
  int n = 0;
  for (int i = 0; i < kCocoJoints; ++i) {
    if (g.joints[i].visibility == 0) continue;
    const double vars = (coco_sigmas()[i] * 2) * (coco_sigmas()[i] * 2);
    const double dx = p.joints[i].x - g.joints[i].x, dy = p.joints[i].y - g.joints[i].y;
    sum += std::exp(-((dx * dx + dy * dy) / vars / area / 2));
    ++n;
  }
  return sum / n;
}

}  // namespace

TEST_CASE("OKS closed forms") {
  std::mt19937_64 rng(1);
  const KeypointSet g = random_pose(rng, 50, 50, 20);
  CHECK(oks(g, g, 900, sigmas()) == 1.0);

  KeypointSet one;
  one.joints.assign(kCocoJoints, Joint{});
  one.joints[5] = {10, 10, 1, 2};
  KeypointSet p = one;
  const double s = 30, k = 2 * coco_sigmas()[5];
  p.joints[5].x += s * k;
  CHECK(oks(p, one, s * s, sigmas()) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  for (int trial = 0; trial < 100; ++trial) {
    KeypointSet gt = random_pose(rng, 0, 0, 40);
    for (auto& j : gt.joints)
      if (test::rand_int(rng, 0, 4) == 0) j.visibility = 0;
    gt.joints[0].visibility = 2;
    const KeypointSet pr = jitter(rng, gt, 5);
    const double area = std::uniform_real_distribution<double>(100, 5000)(rng);
    CHECK(std::abs(oks(pr, gt, area, sigmas()) - oks_oracle(pr, gt, area)) <= 1e-12);

    // common rigid translation
    KeypointSet a = pr, b = gt;
    for (auto& j : a.joints) j.x += 13.5, j.y -= 7.25;
    for (auto& j : b.joints) j.x += 13.5, j.y -= 7.25;
    CHECK(oks(a, b, area, sigmas()) == doctest::Approx(oks(pr, gt, area, sigmas())).epsilon(1e-12));

    // unlabeled joints do not matter
    KeypointSet moved = pr;
    for (int i = 0; i < kCocoJoints; ++i)
      if (gt.joints[i].visibility == 0) moved.joints[i].x += 1000;
    CHECK(oks(moved, gt, area, sigmas()) == oks(pr, gt, area, sigmas()));
    const double v = oks(pr, gt, area, sigmas());
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  CHECK_THROWS(oks(g, g, 0, sigmas()));
  KeypointSet none = g;
  for (auto& j : none.joints) j.visibility = 0;
  CHECK_THROWS(oks(g, none, 100, sigmas()));
}

TEST_CASE("AP: perfect and empty predictions") {
  std::mt19937_64 rng(2);
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (int i = 0; i < 5; ++i) {
    GroundTruth g{i, i % 2, random_pose(rng, 60.0 * i, 0, 20), 1600};
    gts.push_back(g);
    dets.push_back({i, g.image_id, g.pose, 0.9});
  }
  const APReport r = average_precision(dets, gts, sigmas(), coco_thresholds());
  REQUIRE(r.per_threshold.size() == 10);
  for (const auto& [t, ap] : r.per_threshold) CHECK(ap == doctest::Approx(1.0));
  CHECK(r.mean_ap == doctest::Approx(1.0));

  const APReport none = average_precision({}, gts, sigmas(), coco_thresholds());
  CHECK(none.mean_ap == 0.0);
  CHECK(average_precision(dets, {}, sigmas(), coco_thresholds()).mean_ap == 0.0);
}

TEST_CASE("AP: greedy evaluator equals the exhaustive oracle") {
  std::mt19937_64 rng(42);
  int nontrivial = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const APCase c = random_case(rng);
    for (double t : coco_thresholds()) {
      const std::vector<int> greedy = greedy_match(c.dets, c.gts, sigmas(), t);
      const std::vector<int> brute = exhaustive_match(c.dets, c.gts, t);
      CHECK(greedy == brute);
      const double ap = average_precision(c.dets, c.gts, sigmas(), std::vector<double>{t}).mean_ap;
      CHECK(ap == doctest::Approx(ap_oracle(brute, c.gts.size())).epsilon(1e-12));
      nontrivial += ap > 0 && ap < 1;
    }
  }
  CHECK(nontrivial > 100);
}

TEST_CASE("AP properties: threshold monotonicity and order invariance") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    APCase c = random_case(rng);
    const APReport r = average_precision(c.dets, c.gts, sigmas(), coco_thresholds());
    for (std::size_t i = 1; i < r.per_threshold.size(); ++i) CHECK(r.per_threshold[i].second <= r.per_threshold[i - 1].second);
    double sum = 0;
    for (const auto& [t, ap] : r.per_threshold) {
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
      sum += ap;
    }
    CHECK(r.mean_ap == doctest::Approx(sum / 10));

    std::shuffle(c.dets.begin(), c.dets.end(), rng);
    std::shuffle(c.gts.begin(), c.gts.end(), rng);
    const APReport s = average_precision(c.dets, c.gts, sigmas(), coco_thresholds());
    for (std::size_t i = 0; i < 10; ++i) CHECK(s.per_threshold[i].second == r.per_threshold[i].second);
  }
}

TEST_CASE("AP: interpolation arithmetic") {
  // hits at ranks 1 and 3 of 3 detections, 2 ground truths:
  // recall 0.5 with precision 1, recall 1 with precision 2/3
  const std::vector<bool> tp = {true, false, true};
  CHECK(interpolated_ap(tp, 2) == doctest::Approx((51 * 1.0 + 50 * (2.0 / 3)) / 101));
  CHECK(interpolated_ap({}, 3) == 0.0);
  CHECK(interpolated_ap({false, false}, 1) == 0.0);
}

TEST_CASE("PCKh") {
  std::mt19937_64 rng(4);
  PckSample exact;
  exact.gt = random_pose(rng, 0, 0, 30).joints;
  exact.pred = exact.gt;
  exact.norm = 10;
  const PckReport same = pck(std::vector<PckSample>{exact}, 0.5);
  for (const auto& v : same.per_joint) CHECK(v.value() == 1.0);
  CHECK(same.mean == 1.0);

  PckSample edge;
  edge.gt = {{0, 0, 1, 2}, {0, 0, 1, 2}};
  edge.pred = {{4, 0, 1, 2}, {4.0000001, 0, 1, 2}};
  edge.norm = 8;  // half of it is exactly 4
  const PckReport e = pck(std::vector<PckSample>{edge}, 0.5);
  CHECK(e.per_joint[0].value() == 1.0);
  CHECK(e.per_joint[1].value() == 0.0);

  PckSample headless = exact;
  headless.norm.reset();
  PckSample zero = exact;
  zero.norm = 0;
  CHECK(pck(std::vector<PckSample>{headless, zero, exact}, 0.5).skipped == 2);

  // loop oracle over random samples
  std::vector<PckSample> samples;
  for (int i = 0; i < 30; ++i) {
    PckSample s;
    s.gt = random_pose(rng, 0, 0, 30).joints;
    s.gt.resize(kMpiiJoints);
    for (auto& j : s.gt)
      if (test::rand_int(rng, 0, 5) == 0) j.visibility = 0;
    KeypointSet k;
    k.joints = s.gt;
    s.pred = jitter(rng, k, 4).joints;
    s.norm = std::uniform_real_distribution<double>(5, 15)(rng);
    samples.push_back(s);
  }
  const PckReport r = pck(samples, 0.5);
  double mean = 0;
  int present = 0;
  for (int k = 0; k < kMpiiJoints; ++k) {
    int hit = 0, n = 0;
    for (const auto& s : samples) {
      if (s.gt[k].visibility == 0) continue;
      ++n;
      const double dx = s.pred[k].x - s.gt[k].x, dy = s.pred[k].y - s.gt[k].y;
      hit += std::sqrt(dx * dx + dy * dy) <= 0.5 * *s.norm;
    }
    if (n == 0) {
      CHECK(!r.per_joint[k].has_value());
      continue;
    }
    CHECK(r.per_joint[k].value() == doctest::Approx(static_cast<double>(hit) / n));
    mean += static_cast<double>(hit) / n;
    ++present;
  }
  CHECK(r.mean == doctest::Approx(mean / present));
  CHECK(head_segment({0, 0, 3, 4}) == doctest::Approx(3.0));
}

TEST_CASE("COCO annotation and result files round trip") {
  std::mt19937_64 rng(8);
  CocoDataset d;
  d.images = {{1, "a.ppm", 192, 256}, {2, "b.ppm", 192, 256}};
  for (int i = 0; i < 4; ++i) {
    CocoAnnotation a;
    a.id = 10 + i;
    a.image_id = 1 + i % 2;
    a.pose = random_pose(rng, 80, 100, 40);
    a.pose.joints[3].visibility = 1;
    a.pose.joints[4].visibility = 0;
    a.num_keypoints = a.pose.labeled();
    a.area = 1234.5 + i;
    a.iscrowd = i == 3;
    d.annotations.push_back(a);
  }
  std::stringstream ss;
  write_coco_annotations(ss, d);
  const CocoDataset back = read_coco_annotations(ss);
  REQUIRE(back.annotations.size() == 4);
  REQUIRE(back.images.size() == 2);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = d.annotations[i];
    const auto& b = back.annotations[i];
    CHECK(a.id == b.id);
    CHECK(a.image_id == b.image_id);
    CHECK(a.area == b.area);
    CHECK(a.iscrowd == b.iscrowd);
    CHECK(a.num_keypoints == b.num_keypoints);
    CHECK(a.pose.bbox.w == b.pose.bbox.w);
    for (int j = 0; j < kCocoJoints; ++j) {
      CHECK(a.pose.joints[j].x == b.pose.joints[j].x);
      CHECK(a.pose.joints[j].y == b.pose.joints[j].y);
      CHECK(a.pose.joints[j].visibility == b.pose.joints[j].visibility);
    }
  }
  const GroundTruthSet g = ground_truths(back);
  CHECK(g.gts.size() == 3);
  CHECK(g.skipped_crowd == 1);

  std::vector<Detection> dets = {{0, 1, random_pose(rng, 5, 5, 5), 0.75}, {1, 2, random_pose(rng, 5, 5, 5), 0.5}};
  for (auto& d0 : dets)
    for (auto& j : d0.pose.joints) j.score = 0.5;
  std::stringstream rs;
  write_coco_results(rs, dets);
  const auto rb = read_coco_results(rs);
  REQUIRE(rb.size() == 2);
  CHECK(rb[1].score == 0.5);
  CHECK(rb[0].pose.joints[7].x == dets[0].pose.joints[7].x);
  CHECK(rb[0].pose.joints[7].score == 0.5);
}

TEST_CASE("COCO reader rejects malformed records with their index") {
  auto error_of = [](const std::string& text) {
    std::stringstream ss(text);
    try {
      read_coco_annotations(ss, "f.json");
    } catch (const CocoFormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string ok_image = R"({"images":[{"id":1}],"annotations":[)";
  CHECK(error_of(ok_image + R"({"id":1,"image_id":1,"keypoints":[1,2,2],"bbox":[0,0,1,1]},
                                {"id":2,"image_id":1,"keypoints":[1,2],"bbox":[0,0,1,1]}]})")
            .find("annotations[1]") != std::string::npos);
  CHECK(error_of(ok_image + R"({"id":1,"image_id":7,"keypoints":[1,2,2],"bbox":[0,0,1,1]}]})").find("annotations[0]") !=
        std::string::npos);
  CHECK(error_of(ok_image + R"({"id":1,"image_id":1,"keypoints":[1,2,2],"bbox":[0,0,1]}]})").find("bbox") !=
        std::string::npos);
  CHECK(!error_of("{not json").empty());
  CHECK(error_of(ok_image + R"({"id":1,"image_id":1,"keypoints":[1,2,2],"bbox":[0,0,1,1]}]})").empty());
}
