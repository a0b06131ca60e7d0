#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rsn/arch/blocks.hpp"
#include "rsn/tensor/graph.hpp"

namespace rsn {

/// Builds a runnable Graph. Conv weights are drawn from a seeded generator,
/// He-normal (fan-in) unless the spec sets an init std; biases zero,
/// batchnorm gamma 1 / beta 0 with running statistics (0, 1).
template <typename T>
class GraphBuilder final : public ArchBuilder {
 public:
  explicit GraphBuilder(std::uint64_t seed) : rng_(seed) {}

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

  Graph<T>& graph() noexcept { return g_; }
  const std::map<std::string, int>& tags() const noexcept { return tags_; }

 private:
  Graph<T> g_;
  std::mt19937_64 rng_;
  std::map<std::string, int> tags_;
};

/// A built graph plus the handles callers need.
template <typename T>
struct Module {
  Graph<T> graph;
  std::vector<int> inputs;
  std::vector<int> outputs;
  std::map<std::string, int> tags;

  int tagged(const std::string& label) const;
};

template <typename T>
Module<T> build_rsb(const RSBConfig& cfg, std::uint64_t seed);

/// PRM over `channels`. With overrides, alpha and beta become extra graph
/// inputs named "alpha" (shape (N|1, C, 1, 1)) and "beta" (same as x).
template <typename T>
Module<T> build_prm(int channels, bool batchnorm, std::uint64_t seed, bool inject_alpha = false,
                    bool inject_beta = false, bool identity_k = false);

/// One stage on its own: input is the image for stage 0, a head-width
/// feature map otherwise.
template <typename T>
Module<T> build_stage(const NetworkConfig& cfg, int stage, std::uint64_t seed);

/// The full cascade. outputs[t] is the heatmap of stage t.
template <typename T>
Module<T> build_network(const NetworkConfig& cfg, std::uint64_t seed);

/// Eval-mode forward of a single-input module.
template <typename T>
Tensor<T> forward_eval(const Module<T>& m, const Tensor<T>& x);

}  // namespace rsn
