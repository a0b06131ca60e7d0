#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "rsn/data/augment.hpp"
#include "rsn/tensor/tensor.hpp"

namespace rsn {

enum class LossKind { masked_mse };

std::string_view loss_name(LossKind k);
LossKind parse_loss(std::string_view s);

struct TrainConfig {
  int epochs = 1;
  int iterations_per_epoch = 300;
  double base_lr = 5e-4;
  double final_lr = 0.0;
  double weight_decay = 1e-5;
  int batch_size = 8;
  std::uint64_t seed = 7;
  LossKind loss = LossKind::masked_mse;
  AugmentConfig augment{};
  int probe_every = 0;  // steps between probe evaluations; 0 means once per epoch

  void validate() const;
  std::int64_t total_steps() const { return static_cast<std::int64_t>(epochs) * iterations_per_epoch; }
};

/// Linear decay from base_lr at step 0 to final_lr at total_steps.
double lr_at(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg);

/// Masked mean squared error of each stage's heatmaps against the same
/// targets, summed over stages. `mask` has shape (N, K, 1, 1). A fully
/// masked batch gives 0.
template <typename T>
double heatmap_loss(std::span<const Tensor<T>> stage_preds, const Tensor<T>& targets, const Tensor<T>& mask);

}  // namespace rsn
