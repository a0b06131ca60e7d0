#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsn/arch/config.hpp"
#include "rsn/arch/graph_builder.hpp"
#include "rsn/codec/heatmap.hpp"
#include "rsn/codec/joints.hpp"
#include "rsn/data/augment.hpp"
#include "rsn/data/image.hpp"
#include "rsn/metrics/pckh.hpp"
#include "rsn/tensor/adam.hpp"
#include "rsn/tensor/checkpoint.hpp"
#include "rsn/train/schedule.hpp"

namespace rsn {

/// A source image with one annotated person; training crops are cut around
/// `pose.bbox`.
struct TrainExample {
  Image image;
  KeypointSet pose;
};

/// Pixel normalization applied to network inputs.
inline constexpr float kInputMean = 0.5f;
inline constexpr float kInputScale = 4.0f;

/// Stacks equally sized 3-channel crops into a normalized (N, 3, H, W) batch.
Tensor<float> input_batch(std::span<const Image> crops);

/// Row `n` of a (N, K, H, W) network output as a heatmap stack mapped to
/// crop pixels.
HeatmapStack heatmaps_of(const Tensor<float>& out, int n);

/// Eval-mode keypoints for each example's unaugmented crop, decoded from
/// value `heatmaps` of `g` and mapped back to source image coordinates.
std::vector<KeypointSet> predict_poses(const Graph<float>& g, int heatmaps, const NetworkConfig& net,
                                       std::span<const TrainExample> examples, const FlipPairs& pairs,
                                       int batch_size = 8);

/// PCK at `threshold` times the longer side of each example's box.
PckReport box_pck(std::span<const KeypointSet> pred, std::span<const TrainExample> examples, double threshold);

struct StepRecord {
  std::int64_t step = 0;  // 0-based index of the step taken
  double lr = 0;
  double loss = 0;
  std::vector<double> stage_loss;
  bool all_masked = false;
};

struct ProbeRecord {
  std::int64_t step = 0;  // steps completed when probed
  int epoch = 0;
  double pck = 0;  // PCK@0.1 of the longer box side, pooled over joints
  int joints = 0;  // scored joints
};

/// One line of the metrics log: space separated key=value pairs.
std::string to_kv(const StepRecord& r);
std::string to_kv(const ProbeRecord& r);

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::int64_t step, double loss);
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

inline constexpr double kProbeThreshold = 0.1;

/// Single-threaded trainer. Everything a step consumes (sample order,
/// augmentation draws, parameter state) is a function of the seed and the
/// step index, so a run restored from a checkpoint continues exactly as
/// the uninterrupted run would have.
class Trainer {
 public:
  Trainer(const NetworkConfig& net, const TrainConfig& cfg, std::vector<TrainExample> examples,
          FlipPairs pairs = coco_flip_pairs());

  const NetworkConfig& network() const noexcept { return net_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  Graph<float>& graph() noexcept { return model_.graph; }
  const Graph<float>& graph() const noexcept { return model_.graph; }
  std::span<const TrainExample> examples() const noexcept { return examples_; }

  std::int64_t steps_done() const noexcept { return step_; }
  bool finished() const noexcept { return step_ >= cfg_.total_steps(); }
  int masked_batches() const noexcept { return masked_batches_; }

  /// Crop number `k` of the training stream (batch b of step s is k = s * batch + b).
  Sample stream_sample(std::int64_t k) const;
  /// Forward, backward and one Adam update. Throws NonFiniteLossError
  /// before touching parameters if the loss is not finite.
  StepRecord step();
  /// Whether a probe is scheduled after the step just taken.
  bool probe_due() const;
  /// Eval-mode PCK over every example's unaugmented crop.
  ProbeRecord probe() const;
  /// Eval-mode keypoints for every example, in source image coordinates.
  std::vector<KeypointSet> predict() const;

  /// Runs until finished, reporting every step and probe.
  void run(const std::function<void(const StepRecord&)>& on_step,
           const std::function<void(const ProbeRecord&)>& on_probe);

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);

 private:
  NetworkConfig net_;
  TrainConfig cfg_;
  std::vector<TrainExample> examples_;
  FlipPairs pairs_;
  Module<float> model_;
  int target_in_ = -1;
  int mask_in_ = -1;
  std::vector<int> stage_loss_;
  int loss_ = -1;
  Adam<float> adam_;
  std::int64_t step_ = 0;
  int masked_batches_ = 0;
};

/// Loads the weights of a checkpoint written by Trainer into a freshly
/// built network (optimizer state is ignored).
void load_weights(Graph<float>& g, const Checkpoint& ckpt);

}  // namespace rsn
