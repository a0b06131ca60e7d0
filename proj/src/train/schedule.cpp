#include "rsn/train/schedule.hpp"

#include <stdexcept>
#include <string>

#include "rsn/tensor/kernels.hpp"

namespace rsn {

std::string_view loss_name(LossKind k) {
  switch (k) {
    case LossKind::masked_mse:
      return "mse";
  }
  return "?";
}

LossKind parse_loss(std::string_view s) {
  if (s == "mse") return LossKind::masked_mse;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "' (expected mse)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (iterations_per_epoch < 1) throw std::invalid_argument("train: iterations per epoch must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(final_lr >= 0)) throw std::invalid_argument("train: final_lr must be >= 0");
  if (!(base_lr >= final_lr)) throw std::invalid_argument("train: base_lr must be >= final_lr");
  if (!(weight_decay >= 0)) throw std::invalid_argument("train: weight decay must be >= 0");
  if (probe_every < 0) throw std::invalid_argument("train: probe interval must be >= 0");
}

double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) +
                            "]");
  }
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return cfg.base_lr + (cfg.final_lr - cfg.base_lr) * t;
}

template <typename T>
double heatmap_loss(std::span<const Tensor<T>> stage_preds, const Tensor<T>& targets, const Tensor<T>& mask) {
  double total = 0;
  for (const Tensor<T>& p : stage_preds) total += static_cast<double>(masked_mse(p, targets, mask)[0]);
  return total;
}

template double heatmap_loss<float>(std::span<const Tensor<float>>, const Tensor<float>&, const Tensor<float>&);
template double heatmap_loss<double>(std::span<const Tensor<double>>, const Tensor<double>&, const Tensor<double>&);

}  // namespace rsn
