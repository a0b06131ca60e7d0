#include "rsn/arch/grad_cases.hpp"

#include "rsn/arch/graph_builder.hpp"

namespace rsn {

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Tensor<double> noise(Shape s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

GradCase from_module(Module<double>&& m, Shape input, std::string label, std::mt19937_64& rng) {
  GradCase gc;
  gc.graph = std::move(m.graph);
  randomize_parameters(gc.graph, rng);
  gc.inputs.push_back(noise(input, rng));
  gc.output = m.outputs.back();
  gc.label = std::move(label) + " " + to_string(input);
  gc.options.mode = Mode::train;
  return gc;
}

}  // namespace

GradCase make_rsb_case(int branches, FusionMode fusion, std::mt19937_64& rng) {
  RSBConfig cfg;
  cfg.branches = branches;
  cfg.fusion = fusion;
  cfg.in_channels = branches * pick(rng, 1, 2);
  cfg.out_channels = pick(rng, 0, 1) ? cfg.in_channels : pick(rng, 2, 8);
  cfg.branch_width = pick(rng, 1, 2);
  cfg.stride = pick(rng, 0, 3) == 0 ? 2 : 1;
  const Shape x{2, cfg.in_channels, pick(rng, 3, 6), pick(rng, 3, 6)};
  const std::string label = "rsb B=" + std::to_string(branches) + " " + std::string(fusion_name(fusion)) +
                            " w=" + std::to_string(cfg.branch_width) + " s" + std::to_string(cfg.stride);
  return from_module(build_rsb<double>(cfg, rng()), x, label, rng);
}

GradCase make_prm_case(std::mt19937_64& rng) {
  const int c = pick(rng, 1, 3);
  const Shape x{2, c, pick(rng, 3, 8), pick(rng, 3, 8)};
  return from_module(build_prm<double>(c, true, rng()), x, "prm", rng);
}

std::vector<GradSuiteLine> block_grad_suite(int cases_per_variant, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::vector<GradSuiteLine> lines;
  auto run = [&](GradSuiteLine& line, const GradCase& c) {
    const GradCheckReport r = run_case(c, tolerance);
    ++line.cases;
    if (!r.passed) ++line.failures;
    for (const auto& e : r.entries) line.skipped += e.skipped;
    line.worst = std::max(line.worst, r.max_rel_error);
  };
  for (FusionMode mode : {FusionMode::rsn, FusionMode::baseline1, FusionMode::baseline2}) {
    for (int B = 2; B <= 6; ++B) {
      GradSuiteLine line;
      line.label = "rsb B=" + std::to_string(B) + " " + std::string(fusion_name(mode));
      for (int i = 0; i < cases_per_variant; ++i) run(line, make_rsb_case(B, mode, rng));
      lines.push_back(line);
    }
  }
  GradSuiteLine prm;
  prm.label = "prm";
  for (int i = 0; i < cases_per_variant; ++i) run(prm, make_prm_case(rng));
  lines.push_back(prm);
  return lines;
}

}  // namespace rsn
