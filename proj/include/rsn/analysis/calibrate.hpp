#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsn/analysis/cost.hpp"
#include "rsn/arch/config.hpp"

namespace rsn {

/// Published complexity of a preset at 256x192 and the accepted relative
/// deviation of the counter from it.
struct ReferenceCost {
  std::string_view preset;
  double mparams = 0;
  double gflops = 0;
  double params_tolerance = 0;
  double flops_tolerance = 0;
};

std::span<const ReferenceCost> reference_costs();
/// nullptr when the preset has no published figures.
const ReferenceCost* reference_cost(std::string_view preset);

/// Cost of the network described by `cfg` at its configured input size.
CostReport network_cost(const NetworkConfig& cfg);

struct CalibrationResult {
  double multiplier = 1.0;
  CostReport cost;
};

enum class CalibrationTarget { params, flops };

/// Width multiplier whose network cost lands closest to `target`. The cost
/// is monotone in the multiplier up to branch-width rounding, so a bisection
/// brackets the answer and the neighbouring rounding steps are compared.
CalibrationResult calibrate_width(NetworkConfig cfg, CalibrationTarget what, std::int64_t target, double lo = 0.1,
                                  double hi = 8.0);

struct AblationVariant {
  std::string label;  // "rsn B=4", "baseline1 B=4", ...
  NetworkConfig cfg;
  CostReport cost;
  double flop_ratio = 1.0;  // variant FLOPs / reference FLOPs
};

/// `base` with the given fusion and branch count, level and stem widths
/// rounded to multiples of the branch count and the width multiplier re-fit
/// so FLOPs match `reference_flops`.
AblationVariant ablation_variant(const NetworkConfig& base, FusionMode fusion, int branches,
                                 std::int64_t reference_flops);

/// baseline1 and baseline2 at four branches, then the rsn wiring at 2..6.
std::vector<AblationVariant> ablation_suite(const NetworkConfig& base);

}  // namespace rsn
