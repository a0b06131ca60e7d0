#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsn/tensor/graph.hpp"

namespace rsn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

template <typename T>
struct AdamMoments {
  std::vector<T> m;
  std::vector<T> v;
};

/// One bias-corrected Adam update of `param` in place. `step` is the 1-based
/// index of this update.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& moments, std::int64_t step,
                 double lr, const AdamConfig& cfg);

/// Adam over the trainable parameters of a graph. Moments are keyed by
/// parameter position, so the optimizer must stay paired with one graph.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::vector<Parameter<T>>& params, double lr);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  std::vector<AdamMoments<T>>& moments() noexcept { return moments_; }
  const std::vector<AdamMoments<T>>& moments() const noexcept { return moments_; }
  /// Allocates zeroed moments matching `params`.
  void init(const std::vector<Parameter<T>>& params);

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<AdamMoments<T>> moments_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace rsn
