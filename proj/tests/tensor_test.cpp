#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <cstring>
#include <sstream>

#include "rsn/tensor/adam.hpp"
#include "rsn/tensor/checkpoint.hpp"
#include "rsn/tensor/graph.hpp"
#include "rsn/tensor/kernels.hpp"
#include "rsn/tensor/primitive_cases.hpp"
#include "support.hpp"

using namespace rsn;
using rsn::test::conv_reference;
using rsn::test::max_abs_diff;
using rsn::test::rand_int;
using rsn::test::random_tensor;

namespace {
const Tensor<float>* const kNoBias = nullptr;
BatchNormCache<double>* const kNoCache = nullptr;
}  // namespace

TEST_CASE("conv2d: small closed-form cases") {
  Tensor<float> x({1, 1, 3, 3}, 1.0f);
  Tensor<float> w({1, 1, 3, 3}, 1.0f);
  const Tensor<float> y = conv2d(x, w, kNoBias, 1, 0);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y[0] == doctest::Approx(9.0));

  std::mt19937_64 rng(1);
  const Tensor<float> img = random_tensor<float>({2, 1, 5, 6}, rng);
  Tensor<float> id({1, 1, 3, 3}, 0.0f);
  id(0, 0, 1, 1) = 1.0f;
  CHECK(max_abs_diff(conv2d(img, id, kNoBias, 1, 1), img) == 0.0);
}

TEST_CASE("conv2d: matches the nested-loop reference") {
  std::mt19937_64 rng(2);
  const auto x = random_tensor<float>({2, 3, 8, 8}, rng);
  const auto w = random_tensor<float>({4, 3, 3, 3}, rng);
  CHECK(max_abs_diff(conv2d(x, w, kNoBias, 1, 1), conv_reference(x, w, kNoBias, 1, 1)) <= 1e-6);

  for (int trial = 0; trial < 30; ++trial) {
    static constexpr int ks[] = {1, 3, 7, 9};
    const int k = ks[rand_int(rng, 0, 3)];
    const int stride = rand_int(rng, 1, 2);
    const int pad = rand_int(rng, 0, k / 2);
    const Shape xs{rand_int(rng, 1, 3), rand_int(rng, 1, 5), rand_int(rng, k, 12), rand_int(rng, k, 12)};
    const auto xi = random_tensor<float>(xs, rng);
    const auto wi = random_tensor<float>({rand_int(rng, 1, 6), xs.c, k, k}, rng);
    const auto bi = random_tensor<float>({1, wi.shape().n, 1, 1}, rng);
    CAPTURE(to_string(xs));
    CAPTURE(k);
    const double d = max_abs_diff(conv2d(xi, wi, &bi, stride, pad), conv_reference(xi, wi, &bi, stride, pad));
    CHECK(d <= 1e-6);
  }
}

TEST_CASE("conv2d: channel mismatch names the dimension") {
  Graph<float> g;
  const int x = g.input("x", 3);
  const int w = g.parameter("w", {2, 4, 3, 3});
  CHECK_THROWS_WITH_AS(g.conv2d(x, w, -1, 1, 1), doctest::Contains("C_in"), ShapeError);
}

TEST_CASE("depthwise_conv2d: constant field, identity and grouped reference") {
  Tensor<float> x({1, 2, 12, 12}, 0.5f);
  Tensor<float> w({2, 1, 9, 9}, 1.0f);
  const auto y = depthwise_conv2d(x, w, kNoBias, 1, 4);
  CHECK(y(0, 1, 6, 6) == doctest::Approx(81 * 0.5));

  std::mt19937_64 rng(3);
  const auto r = random_tensor<float>({2, 3, 7, 5}, rng);
  Tensor<float> id({3, 1, 3, 3}, 0.0f);
  for (int c = 0; c < 3; ++c) id(c, 0, 1, 1) = 1.0f;
  CHECK(max_abs_diff(depthwise_conv2d(r, id, kNoBias, 1, 1), r) == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 * rand_int(rng, 0, 4) + 1;
    const int c = rand_int(rng, 1, 5);
    const auto xi = random_tensor<float>({rand_int(rng, 1, 2), c, rand_int(rng, 4, 10), rand_int(rng, 4, 10)}, rng);
    const auto wi = random_tensor<float>({c, 1, k, k}, rng);
    const int stride = rand_int(rng, 1, 2);
    CHECK(max_abs_diff(depthwise_conv2d(xi, wi, kNoBias, stride, k / 2),
                       conv_reference(xi, wi, kNoBias, stride, k / 2, c)) <= 1e-6);
  }

  Graph<float> g;
  const int gx = g.input("x", 3);
  const int gw = g.parameter("w", {4, 1, 3, 3});
  CHECK_THROWS_AS(g.depthwise_conv2d(gx, gw, -1, 1, 1), ShapeError);
}

TEST_CASE("elementwise: identities and channel broadcast") {
  std::mt19937_64 rng(4);
  const auto x = random_tensor<float>({2, 3, 4, 5}, rng);
  CHECK(max_abs_diff(elementwise(x, Tensor<float>(x.shape()), BinaryOp::add), x) == 0.0);
  CHECK(max_abs_diff(elementwise(x, Tensor<float>(x.shape(), 1.0f), BinaryOp::mul), x) == 0.0);

  const auto a = random_tensor<float>({1, 3, 1, 1}, rng);
  const auto y = elementwise(x, a, BinaryOp::mul);
  Tensor<float> ref(x.shape());
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) ref(n, c, i, j) = x(n, c, i, j) * a(0, c, 0, 0);
  CHECK(max_abs_diff(y, ref) == 0.0);

  CHECK_THROWS_AS(elementwise(x, Tensor<float>({1, 2, 1, 1}), BinaryOp::add), ShapeError);
}

TEST_CASE("activation: relu and sigmoid") {
  Tensor<double> x({1, 1, 1, 5}, std::vector<double>{-1, 2, 0, 30, -30});
  const auto r = activation(x, Activation::relu);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 2.0);
  const auto s = activation(x, Activation::sigmoid);
  CHECK(s[2] == 0.5);
  CHECK(std::abs(s[3] - 1.0) < 1e-9);
  CHECK(std::abs(s[4]) < 1e-9);
  CHECK(std::isfinite(s[4]));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_tensor<double>({1, 2, 3, 4}, rng, -20, 20);
    const auto sv = activation(v, Activation::sigmoid);
    for (double e : sv.data()) {
      CHECK(e > 0.0);
      CHECK(e < 1.0);
    }
    const auto once = activation(v, Activation::relu);
    CHECK(max_abs_diff(activation(once, Activation::relu), once) == 0.0);
  }
}

TEST_CASE("pool: global average, spike and loop reference") {
  Tensor<float> c({2, 3, 5, 4}, 1.75f);
  const auto gap = pool(c, PoolKind::global_avg);
  CHECK(gap.shape() == Shape{2, 3, 1, 1});
  for (float v : gap.data()) CHECK(v == doctest::Approx(1.75));

  Tensor<float> spike({1, 1, 6, 6}, 0.0f);
  spike(0, 0, 3, 3) = 5.0f;
  const auto mp = pool(spike, PoolKind::max3x3s2);
  CHECK(mp.shape() == Shape{1, 1, 3, 3});
  CHECK(mp(0, 0, 1, 1) == 5.0f);
  CHECK(mp(0, 0, 2, 2) == 5.0f);
  CHECK(mp(0, 0, 0, 0) == 0.0f);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor<float>({rand_int(rng, 1, 2), rand_int(rng, 1, 3), rand_int(rng, 3, 11),
                                         rand_int(rng, 3, 11)},
                                        rng);
    const Shape s = x.shape();
    const auto y = pool(x, PoolKind::max3x3s2);
    const int ho = (s.h + 2 - 3) / 2 + 1, wo = (s.w + 2 - 3) / 2 + 1;
    REQUIRE(y.shape() == Shape{s.n, s.c, ho, wo});
    double worst = 0;
    for (int n = 0; n < s.n; ++n)
      for (int ch = 0; ch < s.c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox) {
            float m = -INFINITY;
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = 2 * oy - 1 + ky, ix = 2 * ox - 1 + kx;
                if (iy >= 0 && iy < s.h && ix >= 0 && ix < s.w) m = std::max(m, x(n, ch, iy, ix));
              }
            worst = std::max(worst, static_cast<double>(std::abs(m - y(n, ch, oy, ox))));
          }
    CHECK(worst <= 1e-6);
  }
  CHECK_THROWS_AS(pool(Tensor<float>({1, 1, 2, 5}), PoolKind::max3x3s2), ShapeError);
}

TEST_CASE("resize_nearest: block replication") {
  Tensor<float> x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const auto y = resize_nearest(x, 2);
  const std::vector<float> want = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(std::vector<float>(y.data().begin(), y.data().end()) == want);
  CHECK_THROWS(resize_nearest(x, 1));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = random_tensor<float>({1, rand_int(rng, 1, 3), rand_int(rng, 1, 5), rand_int(rng, 1, 5)}, rng);
    const int f = rand_int(rng, 2, 4);
    const auto up = resize_nearest(r, f);
    const Shape s = r.shape();
    bool ok = up.shape() == Shape{1, s.c, s.h * f, s.w * f};
    for (int c = 0; c < s.c && ok; ++c) {
      float mx = -INFINITY, my = -INFINITY;
      for (int i = 0; i < s.h * f; ++i)
        for (int j = 0; j < s.w * f; ++j) {
          ok = ok && up(0, c, i, j) == r(0, c, i / f, j / f);
          my = std::max(my, up(0, c, i, j));
        }
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) mx = std::max(mx, r(0, c, i, j));
      ok = ok && mx == my;
    }
    CHECK(ok);
  }
}

TEST_CASE("concat/split round trip") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int parts = rand_int(rng, 1, 5);
    const int each = rand_int(rng, 1, 3);
    const Shape s{rand_int(rng, 1, 2), each, rand_int(rng, 1, 4), rand_int(rng, 1, 4)};
    std::vector<Tensor<float>> xs;
    std::vector<const Tensor<float>*> ptrs;
    for (int p = 0; p < parts; ++p) xs.push_back(random_tensor<float>(s, rng));
    for (auto& t : xs) ptrs.push_back(&t);
    const auto cat = channel_concat<float>(ptrs);
    CHECK(cat.shape().c == parts * each);
    const auto back = channel_split(cat, parts);
    REQUIRE(back.size() == xs.size());
    for (int p = 0; p < parts; ++p) CHECK(max_abs_diff(back[p], xs[p]) == 0.0);
  }
  CHECK_THROWS_AS(channel_split(Tensor<float>({1, 5, 2, 2}), 2), ShapeError);
}

TEST_CASE("batchnorm: train statistics, eval affine, N=1 rejected") {
  std::mt19937_64 rng(9);
  const auto x = random_tensor<double>({4, 3, 5, 5}, rng, -3, 7);
  Tensor<double> gamma({1, 3, 1, 1}, 1.0), beta({1, 3, 1, 1}, 0.0);
  Tensor<double> rm({1, 3, 1, 1}, 0.0), rv({1, 3, 1, 1}, 1.0);
  const auto y = batchnorm(x, gamma, beta, rm, rv, Mode::train, kNoCache);
  for (int c = 0; c < 3; ++c) {
    double s = 0, ss = 0;
    const int cnt = 4 * 25;
    for (int n = 0; n < 4; ++n)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) s += y(n, c, i, j);
    const double mean = s / cnt;
    for (int n = 0; n < 4; ++n)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) ss += (y(n, c, i, j) - mean) * (y(n, c, i, j) - mean);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(ss / cnt - 1.0) < 1e-5);
    CHECK(rm[c] != 0.0);
  }

  Tensor<double> g2({1, 3, 1, 1}, std::vector<double>{2, 3, 4});
  Tensor<double> b2({1, 3, 1, 1}, std::vector<double>{-1, 0, 1});
  Tensor<double> m0({1, 3, 1, 1}, 0.0), v1({1, 3, 1, 1}, 1.0);
  const auto e = batchnorm_eval(x, g2, b2, m0, v1, kNoCache);
  double worst = 0;
  for (int n = 0; n < 4; ++n)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
          const double want = g2[c] * x(n, c, i, j) / std::sqrt(1.0 + kBatchNormEps) + b2[c];
          worst = std::max(worst, std::abs(want - e(n, c, i, j)));
        }
  CHECK(worst < 1e-12);

  const auto one = random_tensor<double>({1, 3, 2, 2}, rng);
  CHECK_THROWS(batchnorm(one, gamma, beta, rm, rv, Mode::train, kNoCache));
}

TEST_CASE("backward: closed-form gradients and ordering errors") {
  Graph<double> g;
  const int x = g.input("x", 2, true);
  const int s = g.sum(x);
  const int sq = g.sum(g.mul(x, x));
  std::mt19937_64 rng(10);
  const auto xv = random_tensor<double>({2, 2, 3, 3}, rng);
  std::vector<Tensor<double>> feed{xv};

  Workspace<double> never;
  CHECK_THROWS_AS(g.backward(never, s), std::logic_error);

  auto ws = g.forward(feed, Mode::eval);
  g.backward(ws, s);
  const auto ones = ws.grad(x);
  for (double v : ones.data()) CHECK(v == 1.0);
  g.backward(ws, sq);
  const auto gx = ws.grad(x);
  for (std::size_t i = 0; i < xv.size(); ++i) CHECK(gx[i] == doctest::Approx(2 * xv[i]));

  // an unused parameter ends up with a zero gradient
  Graph<double> h;
  const int hx = h.input("x", 1);
  const int w1 = h.parameter("used", {1, 1, 3, 3});
  const int w2 = h.parameter("unused", {1, 1, 3, 3});
  const int y1 = h.conv2d(hx, w1, -1, 1, 1);
  h.conv2d(hx, w2, -1, 1, 1);
  const int l = h.sum(y1);
  h.parameter("used").value.fill(0.5);
  h.parameter("unused").value.fill(0.5);
  std::vector<Tensor<double>> hf{random_tensor<double>({1, 1, 4, 4}, rng)};
  auto hws = h.forward(hf, Mode::eval);
  h.backward(hws, l);
  for (double v : h.parameter("unused").value.grad()) CHECK(v == 0.0);
  bool any = false;
  for (double v : h.parameter("used").value.grad()) any = any || v != 0.0;
  CHECK(any);
}

TEST_CASE("backward: conv -> relu -> sum against finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Graph<double> g;
    const int x = g.input("x", 2);
    const int w = g.parameter("w", {3, 2, 3, 3});
    const int b = g.parameter("b", {1, 3, 1, 1});
    const int y = g.relu(g.conv2d(x, w, b, 1, 1));
    g.parameter("w").value = random_tensor<double>({3, 2, 3, 3}, rng);
    g.parameter("b").value = random_tensor<double>({1, 3, 1, 1}, rng);
    std::vector<Tensor<double>> in{random_tensor<double>({2, 2, 5, 5}, rng)};
    const auto r = grad_check(g, in, y, 1e-4);
    CHECK(r.passed);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("grad_check: every primitive on 20 random shapes") {
  const auto lines = primitive_grad_suite(20, 2024, 1e-4);
  CHECK(lines.size() == differentiable_primitives().size());
  for (const auto& l : lines) {
    CAPTURE(l.label);
    CAPTURE(l.worst);
    CHECK(l.cases == 20);
    CHECK(l.failures == 0);
  }
}

TEST_CASE("adam: closed-form steps") {
  AdamConfig cfg;
  std::vector<double> p{1.0};
  std::vector<double> zero{0.0};
  AdamMoments<double> m;
  adam_update<double>(p, zero, m, 1, 0.1, cfg);
  CHECK(p[0] == 1.0);

  // g = 1: m_hat = v_hat = 1 at every step, so each update is lr / (1 + eps)
  std::vector<double> q{0.0};
  std::vector<double> one{1.0};
  AdamMoments<double> mq;
  adam_update<double>(q, one, mq, 1, 0.1, cfg);
  CHECK(q[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(mq.m[0] == doctest::Approx(0.1));
  CHECK(mq.v[0] == doctest::Approx(0.001));
  adam_update<double>(q, one, mq, 2, 0.1, cfg);
  CHECK(q[0] == doctest::Approx(-0.2 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(mq.m[0] == doctest::Approx(0.19));
  CHECK(mq.v[0] == doctest::Approx(0.001999));

  AdamConfig wd;
  wd.weight_decay = 1e-5;
  std::vector<double> r{2.0};
  AdamMoments<double> mr;
  adam_update<double>(r, zero, mr, 1, 1e-3, wd);
  CHECK(r[0] < 2.0);
  CHECK(mr.v[0] >= 0.0);

  CHECK_THROWS(adam_update<double>(r, zero, mr, 2, -1.0, wd));
}

TEST_CASE("adam: optimizer counts steps and skips frozen parameters") {
  Graph<float> g;
  const int x = g.input("x", 1);
  const int w = g.parameter("w", {1, 1, 1, 1});
  g.parameter("frozen", {1, 1, 1, 1}, false);
  const int bn_mean = g.parameter_index("frozen");
  (void)bn_mean;
  const int y = g.sum(g.conv2d(x, w, -1, 1, 0));
  g.parameter("w").value.fill(1.0f);
  g.parameter("frozen").value.fill(3.0f);
  Adam<float> opt;
  std::vector<Tensor<float>> in{Tensor<float>({1, 1, 2, 2}, 1.0f)};
  for (int i = 0; i < 3; ++i) {
    auto ws = g.forward(in, Mode::train);
    g.backward(ws, y);
    opt.step(g.parameters(), 0.01);
  }
  CHECK(opt.steps() == 3);
  CHECK(g.parameter("frozen").value[0] == 3.0f);
  CHECK(g.parameter("w").value[0] < 1.0f);
}

TEST_CASE("checkpoint: bit-exact round trip") {
  std::mt19937_64 rng(12);
  Checkpoint ck;
  auto a = random_tensor<float>({2, 3, 4, 5}, rng, -1e6, 1e6);
  a[0] = -0.0f;
  a[1] = std::numeric_limits<float>::denorm_min();
  auto b = random_tensor<double>({1, 1, 1, 7}, rng);
  b[3] = std::numeric_limits<double>::max();
  ck.put("layer.weight", a);
  ck.put("stats/\xc3\xa9", b);

  const auto path = std::filesystem::temp_directory_path() / "rsn_ckpt_test.bin";
  ck.save(path);
  const Checkpoint back = Checkpoint::load(path);
  std::filesystem::remove(path);
  REQUIRE(back.records().size() == 2);
  const auto a2 = back.get<float>("layer.weight");
  const auto b2 = back.get<double>("stats/\xc3\xa9");
  CHECK(a2.shape() == a.shape());
  CHECK(std::memcmp(a2.ptr(), a.ptr(), a.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(b2.ptr(), b.ptr(), b.size() * sizeof(double)) == 0);
  CHECK(back.at("stats/\xc3\xa9").dtype() == DType::float64);

  std::stringstream bytes;
  ck.write(bytes);
  const std::string raw = bytes.str();
  CHECK(raw.substr(0, 4) == "RSN1");
  CHECK(raw[4] == 1);

  std::stringstream bad("RSN2....");
  CHECK_THROWS_AS(Checkpoint::read(bad), CheckpointError);
  std::stringstream cut(raw.substr(0, raw.size() - 3));
  CHECK_THROWS_AS(Checkpoint::read(cut), CheckpointError);
}

TEST_CASE("graph: forward is deterministic") {
  std::mt19937_64 rng(13);
  Graph<float> g;
  const int x = g.input("x", 3);
  const int w = g.parameter("w", {4, 3, 3, 3});
  const int y = g.relu(g.conv2d(x, w, -1, 2, 1));
  g.parameter("w").value = random_tensor<float>({4, 3, 3, 3}, rng);
  std::vector<Tensor<float>> in{random_tensor<float>({2, 3, 9, 9}, rng)};
  const auto a = g.evaluate(in).value(y);
  const auto b = g.evaluate(in).value(y);
  CHECK(std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0);
  CHECK_NOTHROW(g.validate());
}
