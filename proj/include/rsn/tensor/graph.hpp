#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsn/tensor/kernels.hpp"
#include "rsn/tensor/tensor.hpp"

namespace rsn {

enum class OpKind : std::uint8_t {
  input,
  conv2d,
  depthwise_conv2d,
  add,
  mul,
  relu,
  sigmoid,
  max_pool,
  global_avg_pool,
  resize_nearest,
  concat,
  slice,
  batchnorm,
  prm_combine,
  sum,
  masked_mse,
};

std::string_view op_name(OpKind op);

struct NodeAttrs {
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int factor = 0;
  int begin = 0;
  int count = 0;
};

/// One primitive operation. Its output is the value whose id equals the
/// node's position in the graph.
struct Node {
  OpKind op = OpKind::input;
  std::string name;
  std::vector<int> inputs;
  // conv: weight[, bias]; batchnorm: gamma, beta, running mean, running var
  std::vector<int> params;
  NodeAttrs attrs;
  int channels = 0;
  bool requires_grad = false;  // inputs only
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  bool trainable = true;
};

template <typename T>
class Graph;

/// Values and backward caches of one forward pass.
template <typename T>
class Workspace {
 public:
  bool ran() const noexcept { return ran_; }
  Mode mode() const noexcept { return mode_; }
  bool computed(int id) const { return id >= 0 && id < static_cast<int>(computed_.size()) && computed_[id]; }
  const Tensor<T>& value(int id) const;
  /// Gradient of the last backward pass w.r.t. value `id` (zero tensor if it
  /// received none).
  Tensor<T> grad(int id) const;

 private:
  friend class Graph<T>;
  bool ran_ = false;
  Mode mode_ = Mode::eval;
  std::vector<Tensor<T>> values_;
  std::vector<Tensor<T>> grads_;
  std::vector<char> computed_;
  std::vector<BatchNormCache<T>> bn_;
};

/// Static computation graph with named parameters. Nodes are stored in
/// topological order by construction: a node may only consume values that
/// already exist.
template <typename T>
class Graph {
 public:
  // construction
  int input(std::string name, int channels, bool requires_grad = false);
  int parameter(std::string name, Shape shape, bool trainable = true);
  int conv2d(int x, int weight, int bias, int stride, int pad, std::string name = {});
  int depthwise_conv2d(int x, int weight, int bias, int stride, int pad, std::string name = {});
  int add(int a, int b, std::string name = {});
  int mul(int a, int b, std::string name = {});
  int relu(int x, std::string name = {});
  int sigmoid(int x, std::string name = {});
  int max_pool(int x, std::string name = {});
  int global_avg_pool(int x, std::string name = {});
  int resize_nearest(int x, int factor, std::string name = {});
  int concat(std::vector<int> xs, std::string name = {});
  int slice(int x, int begin, int count, std::string name = {});
  std::vector<int> split(int x, int parts, std::string name = {});
  int batchnorm(int x, int gamma, int beta, int running_mean, int running_var, std::string name = {});
  int prm_combine(int kx, int alpha, int beta, std::string name = {});
  int sum(int x, std::string name = {});
  int masked_mse(int pred, int target, int mask, std::string name = {});
  void mark_output(int value);
  void set_requires_grad(int input_id, bool on);

  // inspection
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(int id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<int>& inputs() const noexcept { return inputs_; }
  const std::vector<int>& outputs() const noexcept { return outputs_; }
  std::vector<Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }
  int parameter_index(std::string_view name) const;
  Parameter<T>& parameter(std::string_view name);
  const Parameter<T>& parameter(std::string_view name) const;
  std::size_t trainable_count() const;
  int channels(int value) const { return nodes_.at(value).channels; }

  /// Static shape inference for the given input shapes.
  std::vector<Shape> infer_shapes(std::span<const Shape> input_shapes) const;
  /// Checks acyclicity/ordering and that every parameter is used.
  void validate() const;

  // execution
  /// `inputs` follows the order of inputs(); entries not needed for `wanted`
  /// may be empty. An empty `wanted` evaluates every node. Train mode updates
  /// batchnorm running statistics.
  Workspace<T> forward(std::span<const Tensor<T>> inputs, Mode mode, std::span<const int> wanted = {});
  /// Eval-mode forward; leaves the graph untouched.
  Workspace<T> evaluate(std::span<const Tensor<T>> inputs, std::span<const int> wanted = {}) const;
  /// Reverse accumulation from the scalar value `loss`. Parameter gradients
  /// are reset first, so parameters the loss does not reach end up zero.
  void backward(Workspace<T>& ws, int loss);
  void zero_grad();

 private:
  int push(Node node);
  const Node& checked(int value, const char* what) const;
  std::vector<char> ancestors(std::span<const int> wanted) const;
  void run(Workspace<T>& ws, std::span<const Tensor<T>> inputs, Mode mode,
           std::span<const int> wanted, bool update_stats);

  std::vector<Node> nodes_;
  std::vector<Parameter<T>> params_;
  std::vector<int> inputs_;
  std::vector<int> outputs_;
};

extern template class Workspace<float>;
extern template class Workspace<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace rsn
