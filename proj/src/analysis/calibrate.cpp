#include "rsn/analysis/calibrate.hpp"

#include <cmath>
#include <cstdlib>

#include "rsn/analysis/symbolic.hpp"

namespace rsn {

namespace {

std::int64_t measure(const CostReport& r, CalibrationTarget what) {
  return what == CalibrationTarget::params ? r.params : r.flops;
}

int round_to_multiple(int v, int m) { return std::max(m, static_cast<int>(std::lround(static_cast<double>(v) / m)) * m); }

}  // namespace

std::span<const ReferenceCost> reference_costs() {
  static const ReferenceCost table[] = {
      {"rsn18", 12.5, 2.5, 0.10, 0.15},
      {"rsn50", 25.7, 6.4, 0.10, 0.15},
      {"rsn50x2", 54.0, 13.9, 0.15, 0.15},
      {"rsn50x4", 111.8, 29.3, 0.15, 0.15},
  };
  return table;
}

const ReferenceCost* reference_cost(std::string_view preset) {
  for (const ReferenceCost& r : reference_costs())
    if (r.preset == preset) return &r;
  return nullptr;
}

CostReport network_cost(const NetworkConfig& cfg) {
  return count_cost(symbolic_network(cfg), Extent{cfg.input_h, cfg.input_w});
}

CalibrationResult calibrate_width(NetworkConfig cfg, CalibrationTarget what, std::int64_t target, double lo,
                                  double hi) {
  auto eval = [&](double m) {
    cfg.width_multiplier = m;
    return network_cost(cfg);
  };
  for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (measure(eval(mid), what) < target) lo = mid;
    else hi = mid;
  }
  CalibrationResult best;
  best.multiplier = -1;
  for (double m : {lo, hi}) {
    CostReport r = eval(m);
    if (best.multiplier < 0 || std::llabs(measure(r, what) - target) < std::llabs(measure(best.cost, what) - target)) {
      best.multiplier = m;
      best.cost = std::move(r);
    }
  }
  // Report the shortest decimal (up to 8 places) that is no worse than the
  // raw bisection endpoint.
  for (double scale = 1e2; scale <= 1e8; scale *= 10) {
    const double rounded = std::round(best.multiplier * scale) / scale;
    CostReport r = eval(rounded);
    if (std::llabs(measure(r, what) - target) <= std::llabs(measure(best.cost, what) - target)) {
      best.multiplier = rounded;
      best.cost = std::move(r);
      break;
    }
  }
  return best;
}

AblationVariant ablation_variant(const NetworkConfig& base, FusionMode fusion, int branches,
                                 std::int64_t reference_flops) {
  NetworkConfig cfg = base;
  cfg.fusion = fusion;
  cfg.branches = branches;
  for (int& c : cfg.channels) c = round_to_multiple(c, branches);
  cfg.stem_channels = round_to_multiple(cfg.stem_channels, branches);
  cfg.validate();
  const CalibrationResult fit = calibrate_width(cfg, CalibrationTarget::flops, reference_flops);
  cfg.width_multiplier = fit.multiplier;
  AblationVariant v;
  v.label = std::string(fusion_name(fusion)) + " B=" + std::to_string(branches);
  v.cfg = cfg;
  v.cost = fit.cost;
  v.flop_ratio = static_cast<double>(fit.cost.flops) / static_cast<double>(reference_flops);
  return v;
}

std::vector<AblationVariant> ablation_suite(const NetworkConfig& base) {
  const std::int64_t reference = network_cost(base).flops;
  std::vector<AblationVariant> out;
  out.push_back(ablation_variant(base, FusionMode::baseline1, 4, reference));
  out.push_back(ablation_variant(base, FusionMode::baseline2, 4, reference));
  for (int b = 2; b <= 6; ++b) out.push_back(ablation_variant(base, FusionMode::rsn, b, reference));
  return out;
}

}  // namespace rsn
