#include "rsn/arch/graph_builder.hpp"

#include <cmath>

namespace rsn {

template <typename T>
Ref GraphBuilder<T>::input(const std::string& name, int channels) {
  return {g_.input(name, channels), channels};
}

template <typename T>
Ref GraphBuilder<T>::conv(Ref x, const ConvSpec& spec, const std::string& name) {
  const int k = spec.kernel;
  const int cin = spec.depthwise ? 1 : x.channels;
  const int out = spec.depthwise ? x.channels : spec.out;
  const int w = g_.parameter(name + ".weight", {out, cin, k, k});
  std::normal_distribution<double> init(0.0, spec.init_std > 0 ? spec.init_std : std::sqrt(2.0 / (cin * k * k)));
  for (auto& v : g_.parameters()[w].value.data()) v = static_cast<T>(init(rng_));
  const int b = spec.bias ? g_.parameter(name + ".bias", {1, out, 1, 1}) : -1;
  const int y = spec.depthwise ? g_.depthwise_conv2d(x.id, w, b, spec.stride, spec.padding(), name)
                               : g_.conv2d(x.id, w, b, spec.stride, spec.padding(), name);
  return {y, out};
}

template <typename T>
Ref GraphBuilder<T>::batchnorm(Ref x, const std::string& name) {
  const Shape s{1, x.channels, 1, 1};
  const int gamma = g_.parameter(name + ".gamma", s);
  const int beta = g_.parameter(name + ".beta", s);
  const int mean = g_.parameter(name + ".mean", s, false);
  const int var = g_.parameter(name + ".var", s, false);
  g_.parameters()[gamma].value.fill(T(1));
  g_.parameters()[var].value.fill(T(1));
  return {g_.batchnorm(x.id, gamma, beta, mean, var, name), x.channels};
}

template <typename T>
Ref GraphBuilder<T>::relu(Ref x) { return {g_.relu(x.id), x.channels}; }
template <typename T>
Ref GraphBuilder<T>::sigmoid(Ref x) { return {g_.sigmoid(x.id), x.channels}; }
template <typename T>
Ref GraphBuilder<T>::add(Ref a, Ref b) { return {g_.add(a.id, b.id), a.channels}; }
template <typename T>
Ref GraphBuilder<T>::prm_combine(Ref kx, Ref alpha, Ref beta) {
  return {g_.prm_combine(kx.id, alpha.id, beta.id), kx.channels};
}

template <typename T>
Ref GraphBuilder<T>::concat(const std::vector<Ref>& xs) {
  std::vector<int> ids;
  int c = 0;
  for (const Ref& r : xs) {
    ids.push_back(r.id);
    c += r.channels;
  }
  return {g_.concat(ids), c};
}

template <typename T>
Ref GraphBuilder<T>::slice(Ref x, int begin, int count) { return {g_.slice(x.id, begin, count), count}; }
template <typename T>
Ref GraphBuilder<T>::max_pool(Ref x) { return {g_.max_pool(x.id), x.channels}; }
template <typename T>
Ref GraphBuilder<T>::global_avg_pool(Ref x) { return {g_.global_avg_pool(x.id), x.channels}; }
template <typename T>
Ref GraphBuilder<T>::upsample(Ref x, int factor) { return {g_.resize_nearest(x.id, factor), x.channels}; }
template <typename T>
void GraphBuilder<T>::mark_output(Ref x) { g_.mark_output(x.id); }
template <typename T>
void GraphBuilder<T>::tag(Ref x, const std::string& label) { tags_[label] = x.id; }

template <typename T>
int Module<T>::tagged(const std::string& label) const {
  const auto it = tags.find(label);
  if (it == tags.end()) throw std::out_of_range("no value tagged '" + label + "'");
  return it->second;
}

namespace {

template <typename T>
Module<T> finish(GraphBuilder<T>& b) {
  Module<T> m;
  m.graph = std::move(b.graph());
  m.inputs = m.graph.inputs();
  m.outputs = m.graph.outputs();
  m.tags = b.tags();
  m.graph.validate();
  return m;
}

}  // namespace

template <typename T>
Module<T> build_rsb(const RSBConfig& cfg, std::uint64_t seed) {
  GraphBuilder<T> b(seed);
  const Ref x = b.input("x", cfg.in_channels);
  b.mark_output(add_rsb(b, x, cfg, "rsb"));
  return finish(b);
}

template <typename T>
Module<T> build_prm(int channels, bool batchnorm, std::uint64_t seed, bool inject_alpha, bool inject_beta,
                    bool identity_k) {
  GraphBuilder<T> b(seed);
  const Ref x = b.input("x", channels);
  PrmOverrides o;
  if (inject_alpha) o.alpha = b.input("alpha", channels);
  if (inject_beta) o.beta = b.input("beta", channels);
  o.identity_k = identity_k;
  b.mark_output(add_prm(b, x, "prm", batchnorm, o));
  return finish(b);
}

template <typename T>
Module<T> build_stage(const NetworkConfig& cfg, int stage, std::uint64_t seed) {
  cfg.validate();
  if (stage < 0 || stage >= cfg.stages) throw ConfigError("stage index out of range");
  GraphBuilder<T> b(seed);
  const Ref x = stage == 0 ? b.input("image", 3) : b.input("features", cfg.head_channels);
  const StageRefs r = add_stage(b, x, cfg, stage);
  b.mark_output(r.heatmaps);
  return finish(b);
}

template <typename T>
Module<T> build_network(const NetworkConfig& cfg, std::uint64_t seed) {
  GraphBuilder<T> b(seed);
  add_network(b, cfg);
  return finish(b);
}

template <typename T>
Tensor<T> forward_eval(const Module<T>& m, const Tensor<T>& x) {
  if (m.inputs.size() != 1 || m.outputs.empty()) throw std::invalid_argument("forward_eval: module must have one input");
  const std::vector<Tensor<T>> feed{x};
  const std::vector<int> want{m.outputs.back()};
  return m.graph.evaluate(feed, want).value(m.outputs.back());
}

#define RSN_INSTANTIATE(T)                                                                          \
  template class GraphBuilder<T>;                                                                   \
  template struct Module<T>;                                                                        \
  template Module<T> build_rsb<T>(const RSBConfig&, std::uint64_t);                                 \
  template Module<T> build_prm<T>(int, bool, std::uint64_t, bool, bool, bool);                      \
  template Module<T> build_stage<T>(const NetworkConfig&, int, std::uint64_t);                      \
  template Module<T> build_network<T>(const NetworkConfig&, std::uint64_t);                         \
  template Tensor<T> forward_eval<T>(const Module<T>&, const Tensor<T>&);

RSN_INSTANTIATE(float)
RSN_INSTANTIATE(double)

}  // namespace rsn
