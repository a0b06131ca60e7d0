#pragma once

// Direct evaluation of residual steps blocks from their parameter tables,
// shared by the arch tests and the acceptance gate.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "rsn/arch/config.hpp"
#include "rsn/tensor/graph.hpp"
#include "support.hpp"

namespace rsn::test {

using T4 = Tensor<double>;

// Reference block evaluation straight from the parameter table, batchnorm off
// (every conv carries a bias).
struct BlockEval {
  const Graph<double>& g;

  T4 conv(const T4& x, const std::string& name, int stride, int pad) const {
    return conv_reference(x, g.parameter(name + ".weight").value, &g.parameter(name + ".bias").value, stride, pad);
  }
  static T4 relu(T4 x) {
    for (auto& v : x.data()) v = std::max(v, 0.0);
    return x;
  }
  static T4 add(T4 a, const T4& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  }
  static T4 slice(const T4& x, int begin, int count) {
    const Shape s = x.shape();
    T4 y({s.n, count, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < count; ++c)
        for (int i = 0; i < s.h; ++i)
          for (int j = 0; j < s.w; ++j) y(n, c, i, j) = x(n, begin + c, i, j);
    return y;
  }
  static T4 concat(const std::vector<T4>& xs) {
    const Shape s = xs[0].shape();
    int total = 0;
    for (const auto& t : xs) total += t.shape().c;
    T4 y({s.n, total, s.h, s.w});
    int off = 0;
    for (const auto& t : xs) {
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < t.shape().c; ++c)
          for (int i = 0; i < s.h; ++i)
            for (int j = 0; j < s.w; ++j) y(n, off + c, i, j) = t(n, c, i, j);
      off += t.shape().c;
    }
    return y;
  }
  T4 unit(const T4& x, const std::string& name) const { return relu(conv(x, name, 1, 1)); }
  T4 base(const T4& f, int branch, int stride) const {
    return relu(conv(f, "rsb.br" + std::to_string(branch) + ".in", stride, 0));
  }
  T4 tail(const std::vector<T4>& ys, const T4& x, const RSBConfig& cfg) const {
    const T4 fused = conv(ys.size() == 1 ? ys[0] : concat(ys), "rsb.fuse", 1, 0);
    const bool proj = cfg.in_channels != cfg.out_channels || cfg.stride != 1;
    return relu(add(fused, proj ? conv(x, "rsb.proj", cfg.stride, 0) : x));
  }
};

// The B = 4 rsn block written out by hand: ten 3x3 convolutions with the
// step-wise sums B1 += A1, C1 += B1, C2 += B2, D1 += C1, D2 += C2, D3 += C3.
inline T4 unrolled_rsb4(const Graph<double>& g, const RSBConfig& cfg, const T4& x) {
  const BlockEval r{g};
  const int q = cfg.in_channels / 4;
  const int s = cfg.stride;
  const T4 a = r.base(BlockEval::slice(x, 0, q), 1, s);
  const T4 b = r.base(BlockEval::slice(x, q, q), 2, s);
  const T4 c = r.base(BlockEval::slice(x, 2 * q, q), 3, s);
  const T4 d = r.base(BlockEval::slice(x, 3 * q, q), 4, s);
  const T4 A1 = r.unit(a, "rsb.br1.u1");
  const T4 B1 = r.unit(BlockEval::add(b, A1), "rsb.br2.u1");
  const T4 B2 = r.unit(B1, "rsb.br2.u2");
  const T4 C1 = r.unit(BlockEval::add(c, B1), "rsb.br3.u1");
  const T4 C2 = r.unit(BlockEval::add(C1, B2), "rsb.br3.u2");
  const T4 C3 = r.unit(C2, "rsb.br3.u3");
  const T4 D1 = r.unit(BlockEval::add(d, C1), "rsb.br4.u1");
  const T4 D2 = r.unit(BlockEval::add(D1, C2), "rsb.br4.u2");
  const T4 D3 = r.unit(BlockEval::add(D2, C3), "rsb.br4.u3");
  const T4 D4 = r.unit(D3, "rsb.br4.u4");
  return r.tail({A1, B2, C3, D4}, x, cfg);
}

// Loop form for any branch count and fusion mode.
inline T4 generic_rsb(const Graph<double>& g, const RSBConfig& cfg, const T4& x) {
  const BlockEval r{g};
  const int B = cfg.branches;
  const int q = cfg.in_channels / B;
  std::vector<std::vector<T4>> out(B);
  std::vector<T4> ys;
  for (int i = 0; i < B; ++i) {
    const int src = cfg.fusion == FusionMode::baseline2 ? std::min(3, B) - 1 : i;
    const T4 base = r.base(BlockEval::slice(x, src * q, q), i + 1, cfg.stride);
    for (int j = 0; j <= i; ++j) {
      T4 in = j == 0 ? base : out[i][j - 1];
      if (cfg.fusion == FusionMode::rsn && i > 0 && j < i) in = BlockEval::add(in, out[i - 1][j]);
      out[i].push_back(r.unit(in, "rsb.br" + std::to_string(i + 1) + ".u" + std::to_string(j + 1)));
    }
    ys.push_back(out[i][i]);
  }
  return r.tail(ys, x, cfg);
}

inline RSBConfig random_block(std::mt19937_64& rng, int B, FusionMode mode) {
  RSBConfig cfg;
  cfg.branches = B;
  cfg.fusion = mode;
  cfg.in_channels = B * rand_int(rng, 1, 3);
  cfg.out_channels = rand_int(rng, 0, 1) ? cfg.in_channels : rand_int(rng, 1, 12);
  cfg.branch_width = rand_int(rng, 1, 4);
  cfg.stride = rand_int(rng, 1, 2);
  cfg.batchnorm = false;
  return cfg;
}

inline void randomize(Graph<double>& g, std::mt19937_64& rng) {
  for (auto& p : g.parameters()) p.value = random_tensor<double>(p.value.shape(), rng, -0.5, 0.5);
}


}  // namespace rsn::test
