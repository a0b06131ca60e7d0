#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rsn/arch/builder.hpp"
#include "rsn/tensor/graph.hpp"

namespace rsn {

enum class SymKind {
  input,
  conv,
  depthwise,
  batchnorm,
  relu,
  sigmoid,
  add,
  mul,
  prm_combine,
  concat,
  slice,
  max_pool,
  global_avg_pool,
  upsample,
  sum,
  loss,
};

std::string_view sym_kind_name(SymKind k);

struct SymNode {
  SymKind kind = SymKind::input;
  std::string name;
  std::vector<int> inputs;
  int channels = 0;     // output channels
  int in_channels = 0;  // conv/depthwise only
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int factor = 1;  // upsample
  bool bias = false;
};

/// Shape-free description of a network: operations, edges and channel
/// counts. Spatial extents are resolved on demand for a given input size.
class SymbolicGraph {
 public:
  /// Appends a node. Inputs may reference any id, including later ones, so
  /// malformed (cyclic) graphs can be represented and are rejected by the
  /// analyses.
  int add(SymNode node);
  void mark_output(int id);
  void tag(int id, const std::string& label);

  const std::vector<SymNode>& nodes() const noexcept { return nodes_; }
  const SymNode& node(int id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::vector<int> inputs() const;
  const std::vector<int>& outputs() const noexcept { return outputs_; }
  const std::map<std::string, int>& tags() const noexcept { return tags_; }
  int tagged(const std::string& label) const;

  /// Node ids ordered so every node follows its inputs. Throws on cycles or
  /// dangling references.
  std::vector<int> topological_order() const;

 private:
  std::vector<SymNode> nodes_;
  std::vector<int> outputs_;
  std::map<std::string, int> tags_;
};

class SymbolicBuilder final : public ArchBuilder {
 public:
  Ref input(const std::string& name, int channels) override;
  Ref conv(Ref x, const ConvSpec& spec, const std::string& name) override;
  Ref batchnorm(Ref x, const std::string& name) override;
  Ref relu(Ref x) override;
  Ref sigmoid(Ref x) override;
  Ref add(Ref a, Ref b) override;
  Ref prm_combine(Ref kx, Ref alpha, Ref beta) override;
  Ref concat(const std::vector<Ref>& xs) override;
  Ref slice(Ref x, int begin, int count) override;
  Ref max_pool(Ref x) override;
  Ref global_avg_pool(Ref x) override;
  Ref upsample(Ref x, int factor) override;
  void mark_output(Ref x) override;
  void tag(Ref x, const std::string& label) override;

  SymbolicGraph& graph() noexcept { return g_; }

 private:
  Ref push(SymKind kind, std::vector<int> inputs, int channels, std::string name = {});
  SymbolicGraph g_;
};

/// Symbolic form of a runtime graph, node for node.
template <typename T>
SymbolicGraph lower(const Graph<T>& g);

struct NetworkConfig;
/// The network described by `cfg`, built symbolically.
SymbolicGraph symbolic_network(const NetworkConfig& cfg);

}  // namespace rsn
