#include "rsn/arch/blocks.hpp"

#include <algorithm>

namespace rsn {

namespace {

constexpr double kHeatmapInitStd = 1e-3;

// conv (+ batchnorm) (+ relu). Without batchnorm the conv carries a bias.
Ref conv_unit(ArchBuilder& b, Ref x, ConvSpec spec, const std::string& name, bool batchnorm, bool relu) {
  spec.bias = !batchnorm;
  Ref y = b.conv(x, spec, name);
  if (batchnorm) y = b.batchnorm(y, name + ".bn");
  if (relu) y = b.relu(y);
  return y;
}

ConvSpec pointwise(int out, int stride = 1) { return ConvSpec{out, 1, stride, 0}; }
ConvSpec conv3x3(int out) { return ConvSpec{out, 3, 1, 1}; }

}  // namespace

Ref add_rsb(ArchBuilder& b, Ref x, const RSBConfig& cfg, const std::string& prefix) {
  cfg.validate();
  if (x.channels != cfg.in_channels) {
    throw ConfigError(prefix + ": input has " + std::to_string(x.channels) + " channels, block expects " +
                      std::to_string(cfg.in_channels));
  }
  const int B = cfg.branches;
  const int split = cfg.in_channels / B;
  const bool bn = cfg.batchnorm;

  std::vector<Ref> f(B);
  if (B == 1) {
    f[0] = x;
  } else if (cfg.fusion == FusionMode::baseline2) {
    const int src = std::min(3, B) - 1;
    const Ref shared = b.slice(x, src * split, split);
    std::fill(f.begin(), f.end(), shared);
  } else {
    for (int i = 0; i < B; ++i) f[i] = b.slice(x, i * split, split);
  }

  // out[i][j]: output of unit j (0-based) of branch i (0-based); branch i has i + 1 units
  std::vector<std::vector<Ref>> out(B);
  std::vector<Ref> ys;
  for (int i = 0; i < B; ++i) {
    const std::string br = prefix + ".br" + std::to_string(i + 1);
    const Ref base = conv_unit(b, f[i], pointwise(cfg.branch_width, cfg.stride), br + ".in", bn, true);
    for (int j = 0; j <= i; ++j) {
      Ref in = j == 0 ? base : out[i][j - 1];
      if (cfg.fusion == FusionMode::rsn && i > 0 && j < i) in = b.add(in, out[i - 1][j]);
      out[i].push_back(conv_unit(b, in, conv3x3(cfg.branch_width), br + ".u" + std::to_string(j + 1), bn, true));
    }
    b.tag(out[i][i], prefix + ".y" + std::to_string(i + 1));
    ys.push_back(out[i][i]);
  }

  const Ref cat = B == 1 ? ys[0] : b.concat(ys);
  const Ref fused = conv_unit(b, cat, pointwise(cfg.out_channels), prefix + ".fuse", bn, false);
  Ref shortcut = x;
  if (cfg.in_channels != cfg.out_channels || cfg.stride != 1) {
    shortcut = conv_unit(b, x, pointwise(cfg.out_channels, cfg.stride), prefix + ".proj", bn, false);
  }
  return b.relu(b.add(fused, shortcut));
}

Ref add_prm(ArchBuilder& b, Ref x, const std::string& prefix, bool batchnorm, const PrmOverrides& overrides) {
  const int C = x.channels;
  const Ref kx = overrides.identity_k ? x : conv_unit(b, x, conv3x3(C), prefix + ".k", batchnorm, true);
  b.tag(kx, prefix + ".kx");

  Ref alpha;
  if (overrides.alpha) {
    alpha = *overrides.alpha;
  } else {
    const Ref pooled = b.global_avg_pool(kx);
    const Ref a1 = b.relu(b.conv(pooled, ConvSpec{C, 1, 1, 0, false, true}, prefix + ".alpha1"));
    alpha = b.sigmoid(b.conv(a1, ConvSpec{C, 1, 1, 0, false, true}, prefix + ".alpha2"));
  }
  b.tag(alpha, prefix + ".alpha");

  Ref beta;
  if (overrides.beta) {
    beta = *overrides.beta;
  } else {
    const Ref b1 = b.conv(kx, ConvSpec{C, 1, 1, 0, false, true}, prefix + ".beta1");
    beta = b.sigmoid(b.conv(b1, ConvSpec{C, 9, 1, 4, true, true}, prefix + ".beta_dw"));
  }
  b.tag(beta, prefix + ".beta");

  return b.prm_combine(kx, alpha, beta);
}

StageRefs add_stage(ArchBuilder& b, Ref x, const NetworkConfig& cfg, int stage) {
  const std::string s = "s" + std::to_string(stage);
  const bool bn = cfg.batchnorm;
  StageRefs refs;

  Ref cur;
  if (stage == 0) {
    cur = conv_unit(b, x, ConvSpec{cfg.stem_channels, 7, 2, 3}, s + ".stem", bn, true);
    cur = b.max_pool(cur);
  } else {
    cur = conv_unit(b, x, conv3x3(cfg.stem_channels), s + ".adapt", bn, true);
  }

  for (int l = 0; l < kLevels; ++l) {
    for (int i = 0; i < cfg.blocks[l]; ++i) {
      const RSBConfig blk = cfg.block(l, i, cur.channels);
      cur = add_rsb(b, cur, blk, s + ".l" + std::to_string(l + 1) + ".b" + std::to_string(i + 1));
    }
    b.tag(cur, s + ".level" + std::to_string(l + 1));
    refs.levels.push_back(cur);
  }

  const int U = cfg.head_channels;
  Ref top = conv_unit(b, refs.levels[kLevels - 1], pointwise(U), s + ".lat" + std::to_string(kLevels), bn, false);
  for (int l = kLevels - 2; l >= 0; --l) {
    const Ref lat = conv_unit(b, refs.levels[l], pointwise(U), s + ".lat" + std::to_string(l + 1), bn, false);
    top = b.add(b.upsample(top, 2), lat);
  }
  refs.features = conv_unit(b, top, conv3x3(U), s + ".head", bn, true);
  b.tag(refs.features, s + ".features");

  Ref h = refs.features;
  if (cfg.prm && stage == cfg.stages - 1) h = add_prm(b, h, s + ".prm", bn);
  refs.heatmaps = b.conv(h, ConvSpec{cfg.keypoints, 1, 1, 0, false, true, kHeatmapInitStd}, s + ".heatmap");
  b.tag(refs.heatmaps, s + ".heatmaps");
  return refs;
}

std::vector<StageRefs> add_network(ArchBuilder& b, const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<StageRefs> stages;
  Ref x = b.input("image", 3);
  for (int t = 0; t < cfg.stages; ++t) {
    stages.push_back(add_stage(b, x, cfg, t));
    b.mark_output(stages.back().heatmaps);
    x = stages.back().features;
  }
  return stages;
}

}  // namespace rsn
