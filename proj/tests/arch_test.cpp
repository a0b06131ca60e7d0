#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "rsn/arch/config.hpp"
#include "rsn/arch/grad_cases.hpp"
#include "rsn/arch/graph_builder.hpp"
#include "rsb_reference.hpp"
#include "support.hpp"

using namespace rsn;
using namespace rsn::test;

TEST_CASE("rsb: B=4 matches the hand-unrolled ten-convolution reference") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const RSBConfig cfg = random_block(rng, 4, FusionMode::rsn);
    Module<double> m = build_rsb<double>(cfg, rng());
    randomize(m.graph, rng);
    const T4 x = random_tensor<double>({rand_int(rng, 1, 2), cfg.in_channels, rand_int(rng, 3, 9), rand_int(rng, 3, 9)}, rng);
    CHECK(max_abs_diff(forward_eval(m, x), unrolled_rsb4(m.graph, cfg, x)) <= 1e-6);
  }
}

TEST_CASE("rsb: all branch counts and fusion modes match the loop reference") {
  std::mt19937_64 rng(42);
  for (FusionMode mode : {FusionMode::rsn, FusionMode::baseline1, FusionMode::baseline2}) {
    for (int trial = 0; trial < 50; ++trial) {
      const RSBConfig cfg = random_block(rng, rand_int(rng, 2, 6), mode);
      Module<double> m = build_rsb<double>(cfg, rng());
      randomize(m.graph, rng);
      const T4 x = random_tensor<double>({1, cfg.in_channels, rand_int(rng, 3, 7), rand_int(rng, 3, 7)}, rng);
      CAPTURE(cfg.branches);
      CHECK(max_abs_diff(forward_eval(m, x), generic_rsb(m.graph, cfg, x)) <= 1e-6);
    }
  }
}

TEST_CASE("rsb: fusion modes differ in wiring but not in parameters") {
  RSBConfig cfg;
  cfg.in_channels = 8;
  cfg.out_channels = 8;
  cfg.branch_width = 2;
  std::size_t counts[3];
  int i = 0;
  for (FusionMode mode : {FusionMode::rsn, FusionMode::baseline1, FusionMode::baseline2}) {
    cfg.fusion = mode;
    const auto m = build_rsb<float>(cfg, 1);
    counts[i++] = m.graph.trainable_count();
  }
  CHECK(counts[0] == counts[1]);
  CHECK(counts[1] == counts[2]);
}

TEST_CASE("rsb: B=1 is a plain bottleneck") {
  std::mt19937_64 rng(43);
  RSBConfig cfg;
  cfg.branches = 1;
  cfg.in_channels = 3;
  cfg.out_channels = 5;
  cfg.branch_width = 4;
  cfg.stride = 2;
  cfg.batchnorm = false;
  Module<double> m = build_rsb<double>(cfg, 5);
  randomize(m.graph, rng);

  Graph<double> g;
  auto copy = [&](const std::string& name) {
    const auto& src = m.graph.parameter(name).value;
    const int id = g.parameter(name, src.shape());
    g.parameters()[id].value = src;
    return id;
  };
  const int x = g.input("x", 3);
  const int a = g.relu(g.conv2d(x, copy("rsb.br1.in.weight"), copy("rsb.br1.in.bias"), 2, 0));
  const int b = g.relu(g.conv2d(a, copy("rsb.br1.u1.weight"), copy("rsb.br1.u1.bias"), 1, 1));
  const int c = g.conv2d(b, copy("rsb.fuse.weight"), copy("rsb.fuse.bias"), 1, 0);
  const int sc = g.conv2d(x, copy("rsb.proj.weight"), copy("rsb.proj.bias"), 2, 0);
  const int y = g.relu(g.add(c, sc));
  CHECK(m.graph.trainable_count() == g.trainable_count());

  const T4 in = random_tensor<double>({2, 3, 8, 6}, rng);
  const std::vector<T4> feed{in};
  const std::vector<int> want{y};
  CHECK(max_abs_diff(forward_eval(m, in), g.evaluate(feed, want).value(y)) == 0.0);
}

TEST_CASE("rsb: zero weights with identity shortcut give relu(x)") {
  RSBConfig cfg;
  cfg.in_channels = 8;
  cfg.out_channels = 8;
  cfg.branch_width = 3;
  Module<float> m = build_rsb<float>(cfg, 3);
  for (auto& p : m.graph.parameters())
    if (p.name.ends_with(".weight")) p.value.fill(0.0f);
  std::mt19937_64 rng(44);
  const auto x = random_tensor<float>({2, 8, 5, 5}, rng);
  auto want = x;
  for (auto& v : want.data()) v = std::max(v, 0.0f);
  CHECK(max_abs_diff(forward_eval(m, x), want) == 0.0);
}

TEST_CASE("rsb: indivisible channels are rejected") {
  RSBConfig cfg;
  cfg.in_channels = 10;
  cfg.branches = 4;
  CHECK_THROWS_AS(build_rsb<float>(cfg, 1), ConfigError);
  cfg.in_channels = 12;
  cfg.branches = 7;
  CHECK_THROWS_AS(build_rsb<float>(cfg, 1), ConfigError);
}

TEST_CASE("prm: injected paths follow the combination rule") {
  std::mt19937_64 rng(45);
  const int C = 3;
  auto m = build_prm<double>(C, true, 1, true, true, true);
  const T4 x = random_tensor<double>({2, C, 6, 5}, rng);
  const T4 half_a({1, C, 1, 1}, 0.5);
  const T4 half_b(x.shape(), 0.5);
  const std::vector<T4> feed{x, half_a, half_b};
  const auto y = m.graph.evaluate(feed).value(m.outputs[0]);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y[i] - 1.25 * x[i]));
  CHECK(worst < 1e-15);

  // beta -> 0+ leaves K(x)
  auto real_k = build_prm<double>(C, true, 2, false, true, false);
  const T4 tiny(x.shape(), 1e-12);
  const std::vector<T4> feed2{x, tiny};
  const auto ws = real_k.graph.evaluate(feed2);
  const auto out = ws.value(real_k.outputs[0]);
  const auto kx = ws.value(real_k.tagged("prm.kx"));
  CHECK(max_abs_diff(out, kx) < 1e-9);
}

TEST_CASE("prm: live sigmoid paths scale K(x) by a factor in (1, 2)") {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 20; ++trial) {
    const int C = rand_int(rng, 1, 6);
    auto m = build_prm<double>(C, true, rng());
    randomize(m.graph, rng);
    for (auto& p : m.graph.parameters())
      if (p.name.ends_with(".var")) p.value.fill(1.0);
    const T4 x = random_tensor<double>({2, C, rand_int(rng, 3, 9), rand_int(rng, 3, 9)}, rng);
    const std::vector<T4> feed{x};
    const auto ws = m.graph.evaluate(feed);
    const auto out = ws.value(m.outputs[0]);
    const auto kx = ws.value(m.tagged("prm.kx"));
    bool ok = true;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (kx[i] == 0.0) continue;
      const double r = out[i] / kx[i];
      ok = ok && r > 1.0 && r < 2.0;
    }
    CHECK(ok);
  }
}

TEST_CASE("grad_check: RSB variants and PRM") {
  const auto lines = block_grad_suite(2, 77, 1e-4);
  CHECK(lines.size() == 16);
  for (const auto& l : lines) {
    CAPTURE(l.label);
    CAPTURE(l.worst);
    CHECK(l.failures == 0);
  }
}

TEST_CASE("stage: rsn18 shapes") {
  const NetworkConfig cfg = preset("rsn18");
  const auto m = build_stage<float>(cfg, 0, 1);
  const std::vector<Shape> in{{2, 3, 256, 192}};
  const auto shapes = m.graph.infer_shapes(in);
  CHECK(shapes[m.outputs[0]] == Shape{2, 17, 64, 48});
  for (int l = 1; l <= 4; ++l) {
    const Shape s = shapes[m.tagged("s0.level" + std::to_string(l))];
    CHECK(s.h == 256 >> (l + 1));
    CHECK(s.w == 192 >> (l + 1));
  }
}

TEST_CASE("network: stage count, PRM placement and determinism") {
  NetworkConfig cfg = preset("rsn-tiny");
  cfg.stages = 1;
  cfg.prm = false;
  const auto one = build_network<float>(cfg, 3);
  CHECK(one.outputs.size() == 1);

  cfg.stages = 4;
  cfg.prm = true;
  const auto four = build_network<float>(cfg, 3);
  CHECK(four.outputs.size() == 4);
  int prm_stages[4] = {0, 0, 0, 0};
  for (const auto& p : four.graph.parameters())
    if (p.name.find(".prm.") != std::string::npos) prm_stages[p.name[1] - '0'] = 1;
  CHECK(prm_stages[0] + prm_stages[1] + prm_stages[2] + prm_stages[3] == 1);
  CHECK(prm_stages[3] == 1);

  const auto tiny = build_network<float>(preset("rsn-tiny"), 9);
  const auto tiny2 = build_network<float>(preset("rsn-tiny"), 9);
  std::mt19937_64 rng(47);
  const auto x = random_tensor<float>({2, 3, 128, 96}, rng);
  const auto a = forward_eval(tiny, x);
  const auto b = forward_eval(tiny2, x);
  CHECK(a.shape() == Shape{2, 17, 32, 24});
  CHECK(std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0);

  // eval mode treats samples independently: batch of one gives the same rows
  Tensor<float> first({1, 3, 128, 96});
  std::copy(x.ptr(), x.ptr() + first.size(), first.ptr());
  const auto c = forward_eval(tiny, first);
  CHECK(c.shape() == Shape{1, 17, 32, 24});
  double worst = 0;
  for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(c[i] - a[i])));
  CHECK(worst == 0.0);
}

TEST_CASE("config: parse, write and validation") {
  for (const auto& name : preset_names()) {
    const NetworkConfig c = preset(name);
    std::stringstream ss;
    write_config(ss, c);
    const NetworkConfig back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    std::stringstream first;
    write_config(first, c);
    CHECK(first.str() == again.str());
  }

  std::stringstream bad("stages = 2\nwidth = 3\n");
  CHECK_THROWS_WITH_AS(parse_config(bad, "bad.cfg"), doctest::Contains("bad.cfg:2"), ConfigError);
  std::stringstream odd("input = 250x192\n");
  CHECK_THROWS_AS(parse_config(odd), ConfigError);
  std::stringstream ind("branches = 5\n");
  CHECK_THROWS_AS(parse_config(ind), ConfigError);
  std::stringstream ok("# comment\nname = t # trailing\nblocks = 1, 1, 1, 1\nfusion = baseline2\nprm = on\n");
  const auto c = parse_config(ok);
  CHECK(c.name == "t");
  CHECK(c.blocks == std::array<int, 4>{1, 1, 1, 1});
  CHECK(c.fusion == FusionMode::baseline2);
  CHECK(c.prm);
  CHECK_THROWS_AS(preset("rsn101"), ConfigError);
}
