#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsn/analysis/symbolic.hpp"

namespace rsn {

struct Extent {
  int h = 0;
  int w = 0;
};

/// Spatial extent of every node when each graph input is `input`.
std::vector<Extent> resolve_extents(const SymbolicGraph& g, Extent input);

struct CostEntry {
  int node = -1;
  std::string name;
  SymKind kind = SymKind::conv;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

/// Parameters and multiply-accumulates for one sample. One MAC counts as one
/// FLOP. Conv params = C_out * C_in * k^2 / groups (+ C_out bias); conv MACs =
/// weight params * H_out * W_out; batchnorm params = 2C (running statistics
/// are not parameters). Elementwise ops, pooling and upsampling cost nothing.
struct CostReport {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::vector<CostEntry> entries;
  double gflops() const { return static_cast<double>(flops) * 1e-9; }
  double mparams() const { return static_cast<double>(params) * 1e-6; }
};

CostReport count_cost(const SymbolicGraph& g, Extent input);

}  // namespace rsn
