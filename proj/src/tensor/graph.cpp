#include "rsn/tensor/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace rsn {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::input: return "input";
    case OpKind::conv2d: return "conv2d";
    case OpKind::depthwise_conv2d: return "depthwise_conv2d";
    case OpKind::add: return "add";
    case OpKind::mul: return "mul";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::max_pool: return "max_pool";
    case OpKind::global_avg_pool: return "global_avg_pool";
    case OpKind::resize_nearest: return "resize_nearest";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::batchnorm: return "batchnorm";
    case OpKind::prm_combine: return "prm_combine";
    case OpKind::sum: return "sum";
    case OpKind::masked_mse: return "masked_mse";
  }
  return "unknown";
}

template <typename T>
const Tensor<T>& Workspace<T>::value(int id) const {
  if (!computed(id)) throw std::logic_error("value " + std::to_string(id) + " was not computed");
  return values_[id];
}

template <typename T>
Tensor<T> Workspace<T>::grad(int id) const {
  if (!computed(id)) throw std::logic_error("value " + std::to_string(id) + " was not computed");
  if (id >= static_cast<int>(grads_.size()) || grads_[id].empty()) return Tensor<T>(values_[id].shape());
  return grads_[id];
}

// ------------------------------------------------------------ construction

template <typename T>
int Graph<T>::push(Node node) {
  const int id = static_cast<int>(nodes_.size());
  for (int in : node.inputs) {
    if (in < 0 || in >= id) throw std::invalid_argument("node input " + std::to_string(in) + " does not precede it");
  }
  if (node.name.empty()) node.name = std::string(op_name(node.op)) + "#" + std::to_string(id);
  nodes_.push_back(std::move(node));
  return id;
}

template <typename T>
const Node& Graph<T>::checked(int value, const char* what) const {
  if (value < 0 || value >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument(std::string(what) + ": unknown value id " + std::to_string(value));
  }
  return nodes_[value];
}

template <typename T>
int Graph<T>::input(std::string name, int channels, bool requires_grad) {
  if (channels < 1) throw ShapeError("input '" + name + "': channel count must be positive");
  Node n;
  n.op = OpKind::input;
  n.name = std::move(name);
  n.channels = channels;
  n.requires_grad = requires_grad;
  const int id = push(std::move(n));
  inputs_.push_back(id);
  return id;
}

template <typename T>
void Graph<T>::set_requires_grad(int input_id, bool on) {
  Node& n = nodes_.at(input_id);
  if (n.op != OpKind::input) throw std::invalid_argument("set_requires_grad: value is not an input");
  n.requires_grad = on;
}

template <typename T>
int Graph<T>::parameter(std::string name, Shape shape, bool trainable) {
  if (parameter_index(name) >= 0) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  params_.push_back(Parameter<T>{std::move(name), Tensor<T>(shape), trainable});
  return static_cast<int>(params_.size()) - 1;
}

template <typename T>
int Graph<T>::parameter_index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<int>(i);
  return -1;
}

template <typename T>
Parameter<T>& Graph<T>::parameter(std::string_view name) {
  const int i = parameter_index(name);
  if (i < 0) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return params_[i];
}

template <typename T>
const Parameter<T>& Graph<T>::parameter(std::string_view name) const {
  const int i = parameter_index(name);
  if (i < 0) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return params_[i];
}

template <typename T>
std::size_t Graph<T>::trainable_count() const {
  std::size_t total = 0;
  for (const auto& p : params_)
    if (p.trainable) total += p.value.size();
  return total;
}

namespace {

template <typename T>
const Shape& param_shape(const std::vector<Parameter<T>>& params, int idx, const char* op) {
  if (idx < 0 || idx >= static_cast<int>(params.size())) {
    throw std::invalid_argument(std::string(op) + ": unknown parameter index " + std::to_string(idx));
  }
  return params[idx].value.shape();
}

}  // namespace

template <typename T>
int Graph<T>::conv2d(int x, int weight, int bias, int stride, int pad, std::string name) {
  const Node& in = checked(x, "conv2d");
  const Shape ws = param_shape(params_, weight, "conv2d");
  if (ws.c != in.channels) {
    throw ShapeError("conv2d '" + name + "': input channels (C_in) is " + std::to_string(in.channels) +
                     ", weight expects " + std::to_string(ws.c));
  }
  if (ws.h != ws.w || ws.h < 1) throw ShapeError("conv2d '" + name + "': kernel must be square");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d '" + name + "': bad stride/padding");
  Node n;
  n.op = OpKind::conv2d;
  n.name = std::move(name);
  n.inputs = {x};
  n.params = {weight};
  if (bias >= 0) {
    if (param_shape(params_, bias, "conv2d") != Shape{1, ws.n, 1, 1}) {
      throw ShapeError("conv2d: bias must be (1, C_out, 1, 1)");
    }
    n.params.push_back(bias);
  }
  n.attrs.kernel = ws.h;
  n.attrs.stride = stride;
  n.attrs.pad = pad;
  n.channels = ws.n;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::depthwise_conv2d(int x, int weight, int bias, int stride, int pad, std::string name) {
  const Node& in = checked(x, "depthwise_conv2d");
  const Shape ws = param_shape(params_, weight, "depthwise_conv2d");
  if (ws.n != in.channels || ws.c != 1) {
    throw ShapeError("depthwise_conv2d '" + name + "': weight channel count is " + std::to_string(ws.n) +
                     ", input has " + std::to_string(in.channels));
  }
  Node n;
  n.op = OpKind::depthwise_conv2d;
  n.name = std::move(name);
  n.inputs = {x};
  n.params = {weight};
  if (bias >= 0) n.params.push_back(bias);
  n.attrs.kernel = ws.h;
  n.attrs.stride = stride;
  n.attrs.pad = pad;
  n.channels = ws.n;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::add(int a, int b, std::string name) {
  const Node& na = checked(a, "add");
  const Node& nb = checked(b, "add");
  if (nb.channels != na.channels && nb.channels != 1) {
    throw ShapeError("add: channel count C is " + std::to_string(nb.channels) + ", expected " +
                     std::to_string(na.channels));
  }
  Node n;
  n.op = OpKind::add;
  n.name = std::move(name);
  n.inputs = {a, b};
  n.channels = na.channels;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::mul(int a, int b, std::string name) {
  const Node& na = checked(a, "mul");
  const Node& nb = checked(b, "mul");
  if (nb.channels != na.channels && nb.channels != 1) {
    throw ShapeError("mul: channel count C is " + std::to_string(nb.channels) + ", expected " +
                     std::to_string(na.channels));
  }
  Node n;
  n.op = OpKind::mul;
  n.name = std::move(name);
  n.inputs = {a, b};
  n.channels = na.channels;
  return push(std::move(n));
}

#define RSN_UNARY(method, kind)                          \
  template <typename T>                                  \
  int Graph<T>::method(int x, std::string name) {        \
    const Node& in = checked(x, #method);                \
    Node n;                                              \
    n.op = kind;                                         \
    n.name = std::move(name);                            \
    n.inputs = {x};                                      \
    n.channels = in.channels;                            \
    return push(std::move(n));                           \
  }

RSN_UNARY(relu, OpKind::relu)
RSN_UNARY(sigmoid, OpKind::sigmoid)
RSN_UNARY(max_pool, OpKind::max_pool)
RSN_UNARY(global_avg_pool, OpKind::global_avg_pool)
#undef RSN_UNARY

template <typename T>
int Graph<T>::resize_nearest(int x, int factor, std::string name) {
  const Node& in = checked(x, "resize_nearest");
  if (factor < 2) throw std::invalid_argument("resize_nearest: factor must be >= 2");
  Node n;
  n.op = OpKind::resize_nearest;
  n.name = std::move(name);
  n.inputs = {x};
  n.attrs.factor = factor;
  n.channels = in.channels;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::concat(std::vector<int> xs, std::string name) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  int c = 0;
  for (int x : xs) c += checked(x, "concat").channels;
  Node n;
  n.op = OpKind::concat;
  n.name = std::move(name);
  n.inputs = std::move(xs);
  n.channels = c;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::slice(int x, int begin, int count, std::string name) {
  const Node& in = checked(x, "slice");
  if (begin < 0 || count < 1 || begin + count > in.channels) {
    throw ShapeError("slice: channels [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside C = " + std::to_string(in.channels));
  }
  Node n;
  n.op = OpKind::slice;
  n.name = std::move(name);
  n.inputs = {x};
  n.attrs.begin = begin;
  n.attrs.count = count;
  n.channels = count;
  return push(std::move(n));
}

template <typename T>
std::vector<int> Graph<T>::split(int x, int parts, std::string name) {
  const int c = checked(x, "split").channels;
  if (parts < 1 || c % parts != 0) {
    throw ShapeError("split: channel count C = " + std::to_string(c) + " is not divisible by " +
                     std::to_string(parts));
  }
  std::vector<int> out;
  const int width = c / parts;
  for (int i = 0; i < parts; ++i) {
    out.push_back(slice(x, i * width, width, name.empty() ? std::string{} : name + "." + std::to_string(i)));
  }
  return out;
}

template <typename T>
int Graph<T>::batchnorm(int x, int gamma, int beta, int running_mean, int running_var, std::string name) {
  const Node& in = checked(x, "batchnorm");
  const Shape want{1, in.channels, 1, 1};
  for (int p : {gamma, beta, running_mean, running_var}) {
    if (param_shape(params_, p, "batchnorm") != want) {
      throw ShapeError("batchnorm '" + name + "': parameter '" + params_[p].name + "' must be " + to_string(want));
    }
  }
  Node n;
  n.op = OpKind::batchnorm;
  n.name = std::move(name);
  n.inputs = {x};
  n.params = {gamma, beta, running_mean, running_var};
  n.channels = in.channels;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::prm_combine(int kx, int alpha, int beta, std::string name) {
  const Node& k = checked(kx, "prm_combine");
  if (checked(alpha, "prm_combine").channels != k.channels || checked(beta, "prm_combine").channels != k.channels) {
    throw ShapeError("prm_combine: alpha and beta must have " + std::to_string(k.channels) + " channels");
  }
  Node n;
  n.op = OpKind::prm_combine;
  n.name = std::move(name);
  n.inputs = {kx, alpha, beta};
  n.channels = k.channels;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::sum(int x, std::string name) {
  checked(x, "sum");
  Node n;
  n.op = OpKind::sum;
  n.name = std::move(name);
  n.inputs = {x};
  n.channels = 1;
  return push(std::move(n));
}

template <typename T>
int Graph<T>::masked_mse(int pred, int target, int mask, std::string name) {
  const Node& p = checked(pred, "masked_mse");
  if (checked(target, "masked_mse").channels != p.channels || checked(mask, "masked_mse").channels != p.channels) {
    throw ShapeError("masked_mse: target and mask must have " + std::to_string(p.channels) + " channels");
  }
  Node n;
  n.op = OpKind::masked_mse;
  n.name = std::move(name);
  n.inputs = {pred, target, mask};
  n.channels = 1;
  return push(std::move(n));
}

template <typename T>
void Graph<T>::mark_output(int value) {
  checked(value, "mark_output");
  outputs_.push_back(value);
}

// ----------------------------------------------------------- inspection

template <typename T>
std::vector<Shape> Graph<T>::infer_shapes(std::span<const Shape> input_shapes) const {
  if (input_shapes.size() != inputs_.size()) {
    throw std::invalid_argument("infer_shapes: expected " + std::to_string(inputs_.size()) + " input shapes");
  }
  std::vector<Shape> shapes(nodes_.size());
  std::size_t next_input = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    auto in = [&](int k) { return shapes[n.inputs[k]]; };
    switch (n.op) {
      case OpKind::input:
        shapes[i] = input_shapes[next_input++];
        if (shapes[i].c != n.channels) {
          throw ShapeError("input '" + n.name + "': channel count is " + std::to_string(shapes[i].c) +
                           ", expected " + std::to_string(n.channels));
        }
        break;
      case OpKind::conv2d:
      case OpKind::depthwise_conv2d: {
        const Shape s = in(0);
        const int ho = conv_out_extent(s.h, n.attrs.kernel, n.attrs.stride, n.attrs.pad);
        const int wo = conv_out_extent(s.w, n.attrs.kernel, n.attrs.stride, n.attrs.pad);
        if (ho < 1 || wo < 1) throw ShapeError(n.name + ": spatial size too small for kernel");
        shapes[i] = Shape{s.n, n.channels, ho, wo};
        break;
      }
      case OpKind::add:
      case OpKind::mul:
        if (!broadcastable(in(0), in(1))) {
          throw ShapeError(n.name + ": " + to_string(in(1)) + " does not broadcast to " + to_string(in(0)));
        }
        shapes[i] = in(0);
        break;
      case OpKind::prm_combine:
        if (in(2) != in(0) || !broadcastable(in(0), in(1))) throw ShapeError(n.name + ": operand shapes disagree");
        shapes[i] = in(0);
        break;
      case OpKind::relu:
      case OpKind::sigmoid:
      case OpKind::batchnorm:
        shapes[i] = in(0);
        break;
      case OpKind::max_pool: {
        const Shape s = in(0);
        if (s.h < 3 || s.w < 3) throw ShapeError(n.name + ": spatial size below 3x3 window");
        shapes[i] = Shape{s.n, s.c, conv_out_extent(s.h, 3, 2, 1), conv_out_extent(s.w, 3, 2, 1)};
        break;
      }
      case OpKind::global_avg_pool:
        shapes[i] = Shape{in(0).n, in(0).c, 1, 1};
        break;
      case OpKind::resize_nearest:
        shapes[i] = Shape{in(0).n, in(0).c, in(0).h * n.attrs.factor, in(0).w * n.attrs.factor};
        break;
      case OpKind::concat: {
        Shape s = in(0);
        s.c = 0;
        for (int v : n.inputs) {
          const Shape t = shapes[v];
          if (t.n != s.n || t.h != s.h || t.w != s.w) {
            throw ShapeError(n.name + ": concat operand " + to_string(t) + " disagrees in N/H/W");
          }
          s.c += t.c;
        }
        shapes[i] = s;
        break;
      }
      case OpKind::slice:
        shapes[i] = Shape{in(0).n, n.attrs.count, in(0).h, in(0).w};
        break;
      case OpKind::sum:
      case OpKind::masked_mse:
        shapes[i] = Shape{1, 1, 1, 1};
        break;
    }
  }
  return shapes;
}

template <typename T>
void Graph<T>::validate() const {
  std::vector<char> used(params_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int in : nodes_[i].inputs) {
      if (in < 0 || in >= static_cast<int>(i)) throw std::logic_error("node '" + nodes_[i].name + "' breaks topological order");
    }
    for (int p : nodes_[i].params) used.at(p) = 1;
  }
  for (std::size_t p = 0; p < params_.size(); ++p) {
    if (!used[p]) throw std::logic_error("parameter '" + params_[p].name + "' is not referenced by any node");
  }
}

// ------------------------------------------------------------ execution

template <typename T>
std::vector<char> Graph<T>::ancestors(std::span<const int> wanted) const {
  std::vector<char> need(nodes_.size(), wanted.empty() ? 1 : 0);
  if (wanted.empty()) return need;
  for (int w : wanted) need.at(w) = 1;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!need[i]) continue;
    for (int in : nodes_[i].inputs) need[in] = 1;
  }
  return need;
}

template <typename T>
Workspace<T> Graph<T>::forward(std::span<const Tensor<T>> inputs, Mode mode, std::span<const int> wanted) {
  Workspace<T> ws;
  run(ws, inputs, mode, wanted, mode == Mode::train);
  return ws;
}

template <typename T>
Workspace<T> Graph<T>::evaluate(std::span<const Tensor<T>> inputs, std::span<const int> wanted) const {
  Workspace<T> ws;
  const_cast<Graph*>(this)->run(ws, inputs, Mode::eval, wanted, false);
  return ws;
}

template <typename T>
void Graph<T>::run(Workspace<T>& ws, std::span<const Tensor<T>> inputs, Mode mode, std::span<const int> wanted,
                   bool update_stats) {
  if (inputs.size() != inputs_.size()) {
    throw std::invalid_argument("forward: expected " + std::to_string(inputs_.size()) + " inputs, got " +
                                std::to_string(inputs.size()));
  }
  const std::vector<char> need = ancestors(wanted);
  ws.values_.assign(nodes_.size(), Tensor<T>());
  ws.grads_.clear();
  ws.computed_.assign(nodes_.size(), 0);
  ws.bn_.assign(nodes_.size(), BatchNormCache<T>());
  ws.mode_ = mode;
  std::size_t next_input = 0;
  auto P = [&](int idx) -> const Tensor<T>& { return params_[idx].value; };
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op == OpKind::input) {
      const Tensor<T>& t = inputs[next_input++];
      if (!need[i]) continue;
      if (t.shape().c != n.channels) {
        throw ShapeError("input '" + n.name + "': channel count is " + std::to_string(t.shape().c) +
                         ", expected " + std::to_string(n.channels));
      }
      ws.values_[i] = t;
      ws.values_[i].drop_grad();
      ws.computed_[i] = 1;
      continue;
    }
    if (!need[i]) continue;
    auto in = [&](int k) -> const Tensor<T>& { return ws.values_[n.inputs[k]]; };
    const Tensor<T>* bias = n.params.size() > 1 ? &P(n.params[1]) : nullptr;
    Tensor<T> out;
    switch (n.op) {
      case OpKind::input: break;
      case OpKind::conv2d: out = rsn::conv2d(in(0), P(n.params[0]), bias, n.attrs.stride, n.attrs.pad); break;
      case OpKind::depthwise_conv2d:
        out = rsn::depthwise_conv2d(in(0), P(n.params[0]), bias, n.attrs.stride, n.attrs.pad);
        break;
      case OpKind::add: out = elementwise(in(0), in(1), BinaryOp::add); break;
      case OpKind::mul: out = elementwise(in(0), in(1), BinaryOp::mul); break;
      case OpKind::relu: out = activation(in(0), Activation::relu); break;
      case OpKind::sigmoid: out = activation(in(0), Activation::sigmoid); break;
      case OpKind::max_pool: out = pool(in(0), PoolKind::max3x3s2); break;
      case OpKind::global_avg_pool: out = pool(in(0), PoolKind::global_avg); break;
      case OpKind::resize_nearest: out = rsn::resize_nearest(in(0), n.attrs.factor); break;
      case OpKind::concat: {
        std::vector<const Tensor<T>*> parts;
        for (int v : n.inputs) parts.push_back(&ws.values_[v]);
        out = channel_concat<T>(parts);
        break;
      }
      case OpKind::slice: out = channel_slice(in(0), n.attrs.begin, n.attrs.count); break;
      case OpKind::batchnorm:
        if (mode == Mode::train) {
          // running statistics are only written back for training passes
          Tensor<T> rm = P(n.params[2]);
          Tensor<T> rv = P(n.params[3]);
          out = rsn::batchnorm(in(0), P(n.params[0]), P(n.params[1]), rm, rv, Mode::train, &ws.bn_[i]);
          if (update_stats) {
            params_[n.params[2]].value = std::move(rm);
            params_[n.params[3]].value = std::move(rv);
          }
        } else {
          out = batchnorm_eval(in(0), P(n.params[0]), P(n.params[1]), P(n.params[2]), P(n.params[3]), &ws.bn_[i]);
        }
        break;
      case OpKind::prm_combine: out = rsn::prm_combine(in(0), in(1), in(2)); break;
      case OpKind::sum: out = sum_all(in(0)); break;
      case OpKind::masked_mse: out = rsn::masked_mse(in(0), in(1), in(2)); break;
    }
    ws.values_[i] = std::move(out);
    ws.computed_[i] = 1;
  }
  ws.ran_ = true;
}

template <typename T>
void Graph<T>::zero_grad() {
  for (auto& p : params_)
    if (p.trainable) {
      p.value.ensure_grad();
      p.value.zero_grad();
    }
}

template <typename T>
void Graph<T>::backward(Workspace<T>& ws, int loss) {
  if (!ws.ran_) throw std::logic_error("backward called before forward");
  if (!ws.computed(loss)) throw std::logic_error("backward: loss value was not computed by the forward pass");
  if (ws.values_[loss].size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + to_string(ws.values_[loss].shape()));
  }
  zero_grad();

  // which values can carry gradient to a parameter or a tracked input
  std::vector<char> live(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!ws.computed_[i]) continue;
    if (n.op == OpKind::input) {
      live[i] = n.requires_grad;
      continue;
    }
    bool l = false;
    for (int p : n.params) l = l || params_[p].trainable;
    for (int in : n.inputs) l = l || live[in];
    live[i] = l;
  }

  ws.grads_.assign(nodes_.size(), Tensor<T>());
  auto grad_of = [&](int v) -> std::span<T> {
    if (!live[v]) return {};
    if (ws.grads_[v].empty()) ws.grads_[v] = Tensor<T>(ws.values_[v].shape());
    return ws.grads_[v].data();
  };
  auto pgrad = [&](int idx) -> std::span<T> {
    Parameter<T>& p = params_[idx];
    if (!p.trainable) return {};
    return p.value.grad();
  };
  ws.grads_[loss] = Tensor<T>(ws.values_[loss].shape(), T(1));

  for (int i = loss; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.op == OpKind::input || !live[i] || ws.grads_[i].empty()) continue;
    const Tensor<T>& g = ws.grads_[i];
    auto in = [&](int k) -> const Tensor<T>& { return ws.values_[n.inputs[k]]; };
    auto P = [&](int k) -> const Tensor<T>& { return params_[n.params[k]].value; };
    switch (n.op) {
      case OpKind::input: break;
      case OpKind::conv2d:
        conv2d_backward(in(0), P(0), g, n.attrs.stride, n.attrs.pad, grad_of(n.inputs[0]), pgrad(n.params[0]),
                        n.params.size() > 1 ? pgrad(n.params[1]) : std::span<T>{});
        break;
      case OpKind::depthwise_conv2d:
        depthwise_conv2d_backward(in(0), P(0), g, n.attrs.stride, n.attrs.pad, grad_of(n.inputs[0]),
                                  pgrad(n.params[0]), n.params.size() > 1 ? pgrad(n.params[1]) : std::span<T>{});
        break;
      case OpKind::add:
      case OpKind::mul:
        elementwise_backward(in(0), in(1), g, n.op == OpKind::add ? BinaryOp::add : BinaryOp::mul,
                             grad_of(n.inputs[0]), grad_of(n.inputs[1]));
        break;
      case OpKind::relu:
        if (live[n.inputs[0]]) activation_backward(ws.values_[i], g, Activation::relu, grad_of(n.inputs[0]));
        break;
      case OpKind::sigmoid:
        if (live[n.inputs[0]]) activation_backward(ws.values_[i], g, Activation::sigmoid, grad_of(n.inputs[0]));
        break;
      case OpKind::max_pool:
        if (live[n.inputs[0]]) pool_backward(in(0), g, PoolKind::max3x3s2, grad_of(n.inputs[0]));
        break;
      case OpKind::global_avg_pool:
        if (live[n.inputs[0]]) pool_backward(in(0), g, PoolKind::global_avg, grad_of(n.inputs[0]));
        break;
      case OpKind::resize_nearest:
        if (live[n.inputs[0]]) resize_nearest_backward(g, n.attrs.factor, in(0).shape(), grad_of(n.inputs[0]));
        break;
      case OpKind::concat: {
        int begin = 0;
        for (int v : n.inputs) {
          const int c = ws.values_[v].shape().c;
          if (live[v]) {
            const Tensor<T> part = channel_slice(g, begin, c);
            auto d = grad_of(v);
            for (std::size_t k = 0; k < part.size(); ++k) d[k] += part[k];
          }
          begin += c;
        }
        break;
      }
      case OpKind::slice:
        if (live[n.inputs[0]]) channel_slice_backward(g, n.attrs.begin, in(0).shape(), grad_of(n.inputs[0]));
        break;
      case OpKind::batchnorm:
        batchnorm_backward(in(0), P(0), ws.bn_[i], g, ws.mode_, grad_of(n.inputs[0]), pgrad(n.params[0]),
                           pgrad(n.params[1]));
        break;
      case OpKind::prm_combine:
        prm_combine_backward(in(0), in(1), in(2), g, grad_of(n.inputs[0]), grad_of(n.inputs[1]),
                             grad_of(n.inputs[2]));
        break;
      case OpKind::sum:
        if (live[n.inputs[0]]) {
          auto d = grad_of(n.inputs[0]);
          for (auto& v : d) v += g[0];
        }
        break;
      case OpKind::masked_mse:
        if (live[n.inputs[0]]) masked_mse_backward(in(0), in(1), in(2), g[0], grad_of(n.inputs[0]));
        break;
    }
  }
}

template class Workspace<float>;
template class Workspace<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace rsn
