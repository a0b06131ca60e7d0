#include "rsn/analysis/symbolic.hpp"

#include <stdexcept>

#include "rsn/arch/blocks.hpp"
#include "rsn/arch/config.hpp"

namespace rsn {

std::string_view sym_kind_name(SymKind k) {
  switch (k) {
    case SymKind::input: return "input";
    case SymKind::conv: return "conv";
    case SymKind::depthwise: return "depthwise";
    case SymKind::batchnorm: return "batchnorm";
    case SymKind::relu: return "relu";
    case SymKind::sigmoid: return "sigmoid";
    case SymKind::add: return "add";
    case SymKind::mul: return "mul";
    case SymKind::prm_combine: return "prm_combine";
    case SymKind::concat: return "concat";
    case SymKind::slice: return "slice";
    case SymKind::max_pool: return "max_pool";
    case SymKind::global_avg_pool: return "global_avg_pool";
    case SymKind::upsample: return "upsample";
    case SymKind::sum: return "sum";
    case SymKind::loss: return "loss";
  }
  return "?";
}

int SymbolicGraph::add(SymNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void SymbolicGraph::mark_output(int id) { outputs_.push_back(id); }
void SymbolicGraph::tag(int id, const std::string& label) { tags_[label] = id; }

std::vector<int> SymbolicGraph::inputs() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == SymKind::input) ids.push_back(static_cast<int>(i));
  return ids;
}

int SymbolicGraph::tagged(const std::string& label) const {
  const auto it = tags_.find(label);
  if (it == tags_.end()) throw std::out_of_range("no node tagged '" + label + "'");
  return it->second;
}

std::vector<int> SymbolicGraph::topological_order() const {
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> users(n);
  for (int i = 0; i < n; ++i) {
    for (int in : nodes_[i].inputs) {
      if (in < 0 || in >= n) throw std::invalid_argument("node " + std::to_string(i) + " references missing node " + std::to_string(in));
      users[in].push_back(i);
      ++pending[i];
    }
  }
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (pending[i] == 0) order.push_back(i);
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (int u : users[order[head]])
      if (--pending[u] == 0) order.push_back(u);
  }
  if (static_cast<int>(order.size()) != n) throw std::invalid_argument("symbolic graph contains a cycle");
  return order;
}

Ref SymbolicBuilder::push(SymKind kind, std::vector<int> inputs, int channels, std::string name) {
  SymNode n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.channels = channels;
  n.name = std::move(name);
  return {g_.add(std::move(n)), channels};
}

Ref SymbolicBuilder::input(const std::string& name, int channels) { return push(SymKind::input, {}, channels, name); }

Ref SymbolicBuilder::conv(Ref x, const ConvSpec& spec, const std::string& name) {
  SymNode n;
  n.kind = spec.depthwise ? SymKind::depthwise : SymKind::conv;
  n.name = name;
  n.inputs = {x.id};
  n.in_channels = x.channels;
  n.channels = spec.depthwise ? x.channels : spec.out;
  n.kernel = spec.kernel;
  n.stride = spec.stride;
  n.pad = spec.padding();
  n.bias = spec.bias;
  const int c = n.channels;
  return {g_.add(std::move(n)), c};
}

Ref SymbolicBuilder::batchnorm(Ref x, const std::string& name) { return push(SymKind::batchnorm, {x.id}, x.channels, name); }
Ref SymbolicBuilder::relu(Ref x) { return push(SymKind::relu, {x.id}, x.channels); }
Ref SymbolicBuilder::sigmoid(Ref x) { return push(SymKind::sigmoid, {x.id}, x.channels); }
Ref SymbolicBuilder::add(Ref a, Ref b) { return push(SymKind::add, {a.id, b.id}, a.channels); }
Ref SymbolicBuilder::prm_combine(Ref kx, Ref alpha, Ref beta) {
  return push(SymKind::prm_combine, {kx.id, alpha.id, beta.id}, kx.channels);
}

Ref SymbolicBuilder::concat(const std::vector<Ref>& xs) {
  std::vector<int> ids;
  int c = 0;
  for (const Ref& r : xs) {
    ids.push_back(r.id);
    c += r.channels;
  }
  return push(SymKind::concat, std::move(ids), c);
}

Ref SymbolicBuilder::slice(Ref x, int, int count) { return push(SymKind::slice, {x.id}, count); }
Ref SymbolicBuilder::max_pool(Ref x) {
  SymNode n;
  n.kind = SymKind::max_pool;
  n.inputs = {x.id};
  n.channels = x.channels;
  n.kernel = 3;
  n.stride = 2;
  n.pad = 1;
  return {g_.add(std::move(n)), x.channels};
}
Ref SymbolicBuilder::global_avg_pool(Ref x) { return push(SymKind::global_avg_pool, {x.id}, x.channels); }
Ref SymbolicBuilder::upsample(Ref x, int factor) {
  SymNode n;
  n.kind = SymKind::upsample;
  n.inputs = {x.id};
  n.channels = x.channels;
  n.factor = factor;
  return {g_.add(std::move(n)), x.channels};
}
void SymbolicBuilder::mark_output(Ref x) { g_.mark_output(x.id); }
void SymbolicBuilder::tag(Ref x, const std::string& label) { g_.tag(x.id, label); }

template <typename T>
SymbolicGraph lower(const Graph<T>& g) {
  SymbolicGraph s;
  for (const Node& n : g.nodes()) {
    SymNode m;
    m.name = n.name;
    m.inputs = n.inputs;
    m.channels = n.channels;
    switch (n.op) {
      case OpKind::input: m.kind = SymKind::input; break;
      case OpKind::conv2d:
      case OpKind::depthwise_conv2d: {
        const Shape w = g.parameters()[n.params[0]].value.shape();
        m.kind = n.op == OpKind::conv2d ? SymKind::conv : SymKind::depthwise;
        m.in_channels = g.channels(n.inputs[0]);
        m.kernel = w.h;
        m.stride = n.attrs.stride;
        m.pad = n.attrs.pad;
        m.bias = n.params.size() > 1;
        break;
      }
      case OpKind::batchnorm: m.kind = SymKind::batchnorm; break;
      case OpKind::relu: m.kind = SymKind::relu; break;
      case OpKind::sigmoid: m.kind = SymKind::sigmoid; break;
      case OpKind::add: m.kind = SymKind::add; break;
      case OpKind::mul: m.kind = SymKind::mul; break;
      case OpKind::prm_combine: m.kind = SymKind::prm_combine; break;
      case OpKind::concat: m.kind = SymKind::concat; break;
      case OpKind::slice: m.kind = SymKind::slice; break;
      case OpKind::max_pool:
        m.kind = SymKind::max_pool;
        m.kernel = 3;
        m.stride = 2;
        m.pad = 1;
        break;
      case OpKind::global_avg_pool: m.kind = SymKind::global_avg_pool; break;
      case OpKind::resize_nearest:
        m.kind = SymKind::upsample;
        m.factor = n.attrs.factor;
        break;
      case OpKind::sum: m.kind = SymKind::sum; break;
      case OpKind::masked_mse: m.kind = SymKind::loss; break;
    }
    s.add(std::move(m));
  }
  for (int o : g.outputs()) s.mark_output(o);
  return s;
}

template SymbolicGraph lower<float>(const Graph<float>&);
template SymbolicGraph lower<double>(const Graph<double>&);

SymbolicGraph symbolic_network(const NetworkConfig& cfg) {
  SymbolicBuilder b;
  add_network(b, cfg);
  return std::move(b.graph());
}

}  // namespace rsn
