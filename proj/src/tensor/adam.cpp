#include "rsn/tensor/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace rsn {

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& moments, std::int64_t step,
                 double lr, const AdamConfig& cfg) {
  if (lr < 0) throw std::invalid_argument("adam: learning rate must be >= 0");
  if (step < 1) throw std::invalid_argument("adam: step index must start at 1");
  if (grad.size() != param.size()) throw std::invalid_argument("adam: gradient size mismatch");
  if (moments.m.size() != param.size()) {
    moments.m.assign(param.size(), T(0));
    moments.v.assign(param.size(), T(0));
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]) + cfg.weight_decay * param[i];
    const double m = cfg.beta1 * moments.m[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * moments.v[i] + (1.0 - cfg.beta2) * g * g;
    moments.m[i] = static_cast<T>(m);
    moments.v[i] = static_cast<T>(v);
    const double mhat = m / c1;
    const double vhat = v / c2;
    param[i] = static_cast<T>(param[i] - lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
  }
}

template <typename T>
void Adam<T>::init(const std::vector<Parameter<T>>& params) {
  moments_.assign(params.size(), AdamMoments<T>{});
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    moments_[i].m.assign(params[i].value.size(), T(0));
    moments_[i].v.assign(params[i].value.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(std::vector<Parameter<T>>& params, double lr) {
  if (moments_.size() != params.size()) init(params);
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = params[i];
    if (!p.trainable) continue;
    p.value.ensure_grad();
    adam_update<T>(p.value.data(), p.value.grad(), moments_[i], t_, lr, cfg_);
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, AdamMoments<float>&, std::int64_t,
                                 double, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, AdamMoments<double>&,
                                  std::int64_t, double, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace rsn
