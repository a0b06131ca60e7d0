#include "rsn/tensor/primitive_cases.hpp"

#include <stdexcept>

namespace rsn {

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Tensor<double> noise(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

}  // namespace

void randomize_parameters(Graph<double>& g, std::mt19937_64& rng) {
  for (auto& p : g.parameters()) {
    if (p.name.ends_with(".var")) {
      p.value = noise(p.value.shape(), rng, 0.5, 1.5);
    } else {
      p.value = noise(p.value.shape(), rng);
    }
  }
}

const std::vector<std::string>& differentiable_primitives() {
  static const std::vector<std::string> names = {
      "conv2d", "depthwise_conv2d", "add", "mul", "mul_broadcast", "relu", "sigmoid",
      "max_pool", "global_avg_pool", "resize_nearest", "concat", "slice", "batchnorm_train",
      "batchnorm_eval", "prm_combine", "sum", "masked_mse"};
  return names;
}

GradCase make_primitive_case(std::string_view primitive, std::mt19937_64& rng) {
  GradCase gc;
  Graph<double>& g = gc.graph;
  const int n = pick(rng, 1, 2);
  const int c = pick(rng, 1, 4);
  const int h = pick(rng, 3, 8);
  const int w = pick(rng, 3, 8);
  const Shape xs{n, c, h, w};
  std::string shape = to_string(xs);

  const int x = g.input("x", c);
  gc.inputs.push_back(noise(xs, rng));
  int out = -1;

  if (primitive == "conv2d") {
    static constexpr int kernels[] = {1, 3, 7, 9};
    int k = kernels[pick(rng, 0, 3)];
    while (k > 1 && k > 2 * std::min(h, w) + 1) k -= 2;
    const int stride = pick(rng, 1, 2);
    const int pad = k / 2;
    const int co = pick(rng, 1, 4);
    const int wt = g.parameter("conv.weight", {co, c, k, k});
    const int b = pick(rng, 0, 1) ? g.parameter("conv.bias", {1, co, 1, 1}) : -1;
    out = g.conv2d(x, wt, b, stride, pad);
    shape += " k" + std::to_string(k) + " s" + std::to_string(stride);
  } else if (primitive == "depthwise_conv2d") {
    const int k = 2 * pick(rng, 0, 4) + 1;
    const int wt = g.parameter("dw.weight", {c, 1, k, k});
    const int b = g.parameter("dw.bias", {1, c, 1, 1});
    out = g.depthwise_conv2d(x, wt, b, 1, k / 2);
    shape += " k" + std::to_string(k);
  } else if (primitive == "add" || primitive == "mul") {
    const int y = g.input("y", c);
    gc.inputs.push_back(noise(xs, rng));
    out = primitive == "add" ? g.add(x, y) : g.mul(x, y);
  } else if (primitive == "mul_broadcast") {
    const int y = g.input("y", c);
    gc.inputs.push_back(noise({1, c, 1, 1}, rng));
    out = g.mul(x, y);
  } else if (primitive == "relu") {
    out = g.relu(x);
  } else if (primitive == "sigmoid") {
    gc.inputs[0] = noise(xs, rng, -4.0, 4.0);
    out = g.sigmoid(x);
  } else if (primitive == "max_pool") {
    out = g.max_pool(x);
  } else if (primitive == "global_avg_pool") {
    out = g.global_avg_pool(x);
  } else if (primitive == "resize_nearest") {
    const int f = pick(rng, 2, 3);
    out = g.resize_nearest(x, f);
    shape += " x" + std::to_string(f);
  } else if (primitive == "concat") {
    const int c2 = pick(rng, 1, 4);
    const int y = g.input("y", c2);
    gc.inputs.push_back(noise({n, c2, h, w}, rng));
    out = g.concat({x, y});
  } else if (primitive == "slice") {
    const int begin = pick(rng, 0, c - 1);
    out = g.slice(x, begin, pick(rng, 1, c - begin));
  } else if (primitive == "batchnorm_train" || primitive == "batchnorm_eval") {
    const bool train = primitive == "batchnorm_train";
    if (train && n < 2) {
      gc.inputs[0] = noise({2, c, h, w}, rng);
      shape = to_string(gc.inputs[0].shape());
    }
    const int gamma = g.parameter("bn.gamma", {1, c, 1, 1});
    const int beta = g.parameter("bn.beta", {1, c, 1, 1});
    const int mean = g.parameter("bn.mean", {1, c, 1, 1}, false);
    const int var = g.parameter("bn.var", {1, c, 1, 1}, false);
    out = g.batchnorm(x, gamma, beta, mean, var);
    gc.options.mode = train ? Mode::train : Mode::eval;
  } else if (primitive == "prm_combine") {
    const int a = g.input("alpha", c);
    const int b = g.input("beta", c);
    gc.inputs.push_back(noise({pick(rng, 0, 1) ? n : 1, c, 1, 1}, rng, 0.0, 1.0));
    gc.inputs.push_back(noise(xs, rng, 0.0, 1.0));
    out = g.prm_combine(x, a, b);
  } else if (primitive == "sum") {
    out = g.sum(x);
  } else if (primitive == "masked_mse") {
    const int t = g.input("target", c);
    const int m = g.input("mask", c);
    gc.inputs.push_back(noise(xs, rng));
    Tensor<double> mask({n, c, 1, 1});
    for (auto& v : mask.data()) v = pick(rng, 0, 3) > 0 ? 1.0 : 0.0;
    mask[0] = 1.0;
    gc.inputs.push_back(mask);
    out = g.masked_mse(x, t, m);
    gc.options.constant_inputs = {"target", "mask"};
  } else {
    throw std::invalid_argument("unknown primitive '" + std::string(primitive) + "'");
  }
  g.mark_output(out);
  randomize_parameters(g, rng);
  gc.output = out;
  gc.label = std::string(primitive) + " " + shape;
  return gc;
}

GradCheckReport run_case(const GradCase& c, double tolerance) {
  return grad_check(c.graph, c.inputs, c.output, tolerance, c.options);
}

std::vector<GradSuiteLine> primitive_grad_suite(int cases_per_primitive, std::uint64_t seed, double tolerance) {
  std::vector<GradSuiteLine> lines;
  std::mt19937_64 rng(seed);
  for (const auto& name : differentiable_primitives()) {
    GradSuiteLine line;
    line.label = name;
    for (int i = 0; i < cases_per_primitive; ++i) {
      const GradCase c = make_primitive_case(name, rng);
      const GradCheckReport r = run_case(c, tolerance);
      ++line.cases;
      if (!r.passed) ++line.failures;
      for (const auto& e : r.entries) line.skipped += e.skipped;
      line.worst = std::max(line.worst, r.max_rel_error);
    }
    lines.push_back(line);
  }
  return lines;
}

}  // namespace rsn
