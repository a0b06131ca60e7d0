#include "rsn/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rsn {

double gradient_rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Activation pattern of every relu and max-pool in the pass. Two passes with
// equal signatures lie on the same smooth piece of the function.
std::vector<std::int32_t> kink_signature(const Graph<double>& g, const Workspace<double>& ws) {
  std::vector<std::int32_t> sig;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(static_cast<int>(i));
    if (!ws.computed(static_cast<int>(i))) continue;
    if (n.op == OpKind::relu) {
      for (double v : ws.value(n.inputs[0]).data()) sig.push_back(v > 0 ? 1 : 0);
    } else if (n.op == OpKind::max_pool) {
      const Tensor<double>& x = ws.value(n.inputs[0]);
      const Shape xs = x.shape();
      const Shape ys = ws.value(static_cast<int>(i)).shape();
      for (int b = 0; b < xs.n; ++b)
        for (int c = 0; c < xs.c; ++c)
          for (int oy = 0; oy < ys.h; ++oy)
            for (int ox = 0; ox < ys.w; ++ox) {
              int arg = -1;
              double best = 0;
              for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                  const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                  if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                  const double v = x(b, c, iy, ix);
                  if (arg < 0 || v > best) {
                    best = v;
                    arg = iy * xs.w + ix;
                  }
                }
              sig.push_back(arg);
            }
    }
  }
  return sig;
}

}  // namespace

GradCheckReport grad_check(const Graph<double>& graph, std::span<const Tensor<double>> inputs, int output,
                           double tolerance, const GradCheckOptions& options) {
  Graph<double> g = graph;
  const std::vector<Shape> shapes = [&] {
    std::vector<Shape> s;
    for (const auto& t : inputs) s.push_back(t.shape());
    return g.infer_shapes(s);
  }();
  const Shape out_shape = shapes.at(output);

  const int probe = g.input("gradcheck.probe", out_shape.c);
  const int loss = g.sum(g.mul(output, probe));
  auto tracked = [&](int id) {
    const auto& skip = options.constant_inputs;
    return options.check_inputs && std::find(skip.begin(), skip.end(), graph.node(id).name) == skip.end();
  };
  for (int id : graph.inputs()) g.set_requires_grad(id, tracked(id));

  std::mt19937_64 rng(options.probe_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<double> r(out_shape);
  for (auto& v : r.data()) v = normal(rng);

  std::vector<Tensor<double>> feed(inputs.begin(), inputs.end());
  feed.push_back(r);

  auto eval_loss = [&](std::vector<std::int32_t>* sig) {
    Workspace<double> ws = g.forward(feed, options.mode);
    if (sig) *sig = kink_signature(g, ws);
    return ws.value(loss)[0];
  };

  Workspace<double> ws = g.forward(feed, options.mode);
  g.backward(ws, loss);

  GradCheckReport report;
  report.tolerance = tolerance;

  auto check_buffer = [&](const std::string& name, std::span<double> values, std::span<const double> analytic) {
    GradCheckEntry e;
    e.name = name;
    e.elements = values.size();
    std::vector<std::int32_t> sig_plus, sig_minus;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + options.epsilon;
      const double lp = eval_loss(&sig_plus);
      values[i] = orig - options.epsilon;
      const double lm = eval_loss(&sig_minus);
      values[i] = orig;
      if (sig_plus != sig_minus) {
        ++e.skipped;
        continue;
      }
      const double numeric = (lp - lm) / (2 * options.epsilon);
      e.max_rel_error = std::max(e.max_rel_error, gradient_rel_error(analytic[i], numeric, options.magnitude_floor));
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  };

  for (auto& p : g.parameters()) {
    if (!p.trainable) continue;
    const std::vector<double> analytic(p.value.grad().begin(), p.value.grad().end());
    check_buffer(p.name, p.value.data(), analytic);
  }
  for (std::size_t k = 0; k < graph.inputs().size(); ++k) {
    const int id = graph.inputs()[k];
    if (!tracked(id)) continue;
    const Tensor<double> analytic = ws.grad(id);
    check_buffer(g.node(id).name, feed[k].data(), analytic.data());
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace rsn
