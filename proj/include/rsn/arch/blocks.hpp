#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsn/arch/builder.hpp"
#include "rsn/arch/config.hpp"

namespace rsn {

/// Residual steps block. Branch outputs are tagged "<prefix>.y1" .. "yB".
Ref add_rsb(ArchBuilder& b, Ref x, const RSBConfig& cfg, const std::string& prefix);

/// Replacement paths used to test the PRM combination arithmetic in
/// isolation. Unset members keep the real path.
struct PrmOverrides {
  std::optional<Ref> alpha;
  std::optional<Ref> beta;
  bool identity_k = false;
};

/// Pose refine machine: K(x) * (1 + beta * alpha). Width preserving.
Ref add_prm(ArchBuilder& b, Ref x, const std::string& prefix, bool batchnorm, const PrmOverrides& overrides = {});

struct StageRefs {
  std::vector<Ref> levels;  // last block output of each level
  Ref features;             // 1/4-resolution map handed to the next stage
  Ref heatmaps;
};

/// One single-stage network. `x` is the image for stage 0 and the previous
/// stage's features otherwise.
StageRefs add_stage(ArchBuilder& b, Ref x, const NetworkConfig& cfg, int stage);

/// The full cascade; heatmaps of every stage are marked as outputs.
std::vector<StageRefs> add_network(ArchBuilder& b, const NetworkConfig& cfg);

}  // namespace rsn
