#include "rsn/analysis/cost.hpp"

#include <stdexcept>

namespace rsn {

std::vector<Extent> resolve_extents(const SymbolicGraph& g, Extent input) {
  if (input.h < 1 || input.w < 1) {
    throw std::invalid_argument("input extent " + std::to_string(input.h) + "x" + std::to_string(input.w) +
                                " is unresolved; give a positive size");
  }
  std::vector<Extent> ext(g.size());
  for (int id : g.topological_order()) {
    const SymNode& n = g.node(id);
    if (n.kind == SymKind::input) {
      ext[id] = input;
      continue;
    }
    const Extent in = ext[n.inputs.at(0)];
    switch (n.kind) {
      case SymKind::conv:
      case SymKind::depthwise:
      case SymKind::max_pool: {
        const Extent e{(in.h + 2 * n.pad - n.kernel) / n.stride + 1, (in.w + 2 * n.pad - n.kernel) / n.stride + 1};
        if (in.h + 2 * n.pad < n.kernel || in.w + 2 * n.pad < n.kernel || e.h < 1 || e.w < 1) {
          throw std::invalid_argument("node " + std::to_string(id) + " (" + n.name + "): spatial size " +
                                      std::to_string(in.h) + "x" + std::to_string(in.w) + " too small for its window");
        }
        ext[id] = e;
        break;
      }
      case SymKind::global_avg_pool:
      case SymKind::sum:
      case SymKind::loss: ext[id] = {1, 1}; break;
      case SymKind::upsample: ext[id] = {in.h * n.factor, in.w * n.factor}; break;
      default: ext[id] = in; break;
    }
  }
  return ext;
}

CostReport count_cost(const SymbolicGraph& g, Extent input) {
  const std::vector<Extent> ext = resolve_extents(g, input);
  CostReport r;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SymNode& n = g.node(static_cast<int>(i));
    CostEntry e;
    e.node = static_cast<int>(i);
    e.name = n.name;
    e.kind = n.kind;
    if (n.kind == SymKind::conv || n.kind == SymKind::depthwise) {
      const std::int64_t per_out = n.kind == SymKind::depthwise ? 1 : n.in_channels;
      const std::int64_t weights = static_cast<std::int64_t>(n.channels) * per_out * n.kernel * n.kernel;
      e.params = weights + (n.bias ? n.channels : 0);
      e.macs = weights * ext[i].h * ext[i].w;
    } else if (n.kind == SymKind::batchnorm) {
      e.params = 2 * static_cast<std::int64_t>(n.channels);
    } else {
      continue;
    }
    r.params += e.params;
    r.flops += e.macs;
    r.entries.push_back(std::move(e));
  }
  return r;
}

}  // namespace rsn
