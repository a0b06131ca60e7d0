#include "rsn/train/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "rsn/data/synth.hpp"

namespace rsn {

namespace {

constexpr std::uint64_t kAugmentStream = 0x5851f42d4c957f2dULL;

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string param_key(const std::string& name) { return "param/" + name; }

}  // namespace

Tensor<float> input_batch(std::span<const Image> crops) {
  if (crops.empty()) throw std::invalid_argument("input_batch: no crops");
  const int h = crops[0].height, w = crops[0].width;
  Tensor<float> x(Shape{static_cast<int>(crops.size()), 3, h, w});
  for (std::size_t n = 0; n < crops.size(); ++n) {
    const Image& img = crops[n];
    if (img.channels != 3 || img.height != h || img.width != w) {
      throw std::invalid_argument("input_batch: crop " + std::to_string(n) + " must be 3 x " + std::to_string(h) +
                                  " x " + std::to_string(w));
    }
    float* dst = x.ptr() + x.offset(static_cast<int>(n), 0, 0, 0);
    for (std::size_t i = 0; i < img.data.size(); ++i) dst[i] = (img.data[i] - kInputMean) * kInputScale;
  }
  return x;
}

HeatmapStack heatmaps_of(const Tensor<float>& out, int n) {
  const Shape s = out.shape();
  HeatmapStack h(s.c, s.h, s.w);
  const float* src = out.ptr() + out.offset(n, 0, 0, 0);
  std::copy(src, src + h.values.size(), h.values.begin());
  h.to_image = Affine::scaling(kHeatmapStride, kHeatmapStride);
  return h;
}

std::string to_kv(const StepRecord& r) {
  std::string s = "step=" + std::to_string(r.step) + " lr=" + num(r.lr) + " loss=" + num(r.loss);
  for (std::size_t i = 0; i < r.stage_loss.size(); ++i) s += " stage" + std::to_string(i) + "=" + num(r.stage_loss[i]);
  if (r.all_masked) s += " all_masked=1";
  return s;
}

std::string to_kv(const ProbeRecord& r) {
  return "probe step=" + std::to_string(r.step) + " epoch=" + std::to_string(r.epoch) + " pck=" + num(r.pck) +
         " joints=" + std::to_string(r.joints);
}

NonFiniteLossError::NonFiniteLossError(std::int64_t step, double loss)
    : std::runtime_error("non-finite loss " + num(loss) + " at step " + std::to_string(step)), step_(step) {}

Trainer::Trainer(const NetworkConfig& net, const TrainConfig& cfg, std::vector<TrainExample> examples,
                 FlipPairs pairs)
    : net_(net),
      cfg_(cfg),
      examples_(std::move(examples)),
      pairs_(std::move(pairs)),
      model_(build_network<float>(net, cfg.seed)),
      adam_(AdamConfig{.weight_decay = cfg.weight_decay}) {
  net_.validate();
  cfg_.validate();
  if (examples_.empty()) throw std::invalid_argument("train: no training examples");
  for (const TrainExample& e : examples_) {
    if (static_cast<int>(e.pose.joints.size()) != net_.keypoints) {
      throw std::invalid_argument("train: example has " + std::to_string(e.pose.joints.size()) +
                                  " joints, network predicts " + std::to_string(net_.keypoints));
    }
  }
  Graph<float>& g = model_.graph;
  target_in_ = g.input("target", net_.keypoints);
  mask_in_ = g.input("mask", net_.keypoints);
  for (std::size_t t = 0; t < model_.outputs.size(); ++t) {
    stage_loss_.push_back(g.masked_mse(model_.outputs[t], target_in_, mask_in_, "loss" + std::to_string(t)));
  }
  loss_ = stage_loss_[0];
  for (std::size_t t = 1; t < stage_loss_.size(); ++t) loss_ = g.add(loss_, stage_loss_[t]);
  adam_.init(g.parameters());
}

Sample Trainer::stream_sample(std::int64_t k) const {
  const int n = static_cast<int>(examples_.size());
  const auto order = epoch_order(cfg_.seed, static_cast<int>(k / n), n);
  const TrainExample& e = examples_[order[static_cast<std::size_t>(k % n)]];
  auto rng = sample_rng(cfg_.seed ^ kAugmentStream, static_cast<std::uint64_t>(k));
  const AugmentParams params = sample_augment(rng, cfg_.augment);
  return make_sample(e.image, e.pose, params, net_.input_w, net_.input_h, pairs_, order[k % n]);
}

StepRecord Trainer::step() {
  if (finished()) throw std::logic_error("train: all steps already taken");
  const int B = cfg_.batch_size, K = net_.keypoints;
  const int hh = net_.heatmap_h(), hw = net_.heatmap_w();
  std::vector<Image> crops;
  Tensor<float> target(Shape{B, K, hh, hw});
  Tensor<float> mask(Shape{B, K, 1, 1});
  for (int b = 0; b < B; ++b) {
    Sample s = stream_sample(step_ * B + b);
    const Targets t = encode_targets(s.pose, hh, hw);
    std::copy(t.heatmaps.values.begin(), t.heatmaps.values.end(), target.ptr() + target.offset(b, 0, 0, 0));
    std::copy(t.mask.begin(), t.mask.end(), mask.ptr() + mask.offset(b, 0, 0, 0));
    crops.push_back(std::move(s.image));
  }

  Graph<float>& g = model_.graph;
  std::vector<Tensor<float>> inputs(g.inputs().size());
  inputs[0] = input_batch(crops);
  inputs[1] = std::move(target);
  inputs[2] = std::move(mask);
  StepRecord rec;
  rec.step = step_;
  rec.lr = lr_at(step_, cfg_.total_steps(), cfg_);
  rec.all_masked = std::all_of(inputs[2].data().begin(), inputs[2].data().end(), [](float m) { return m == 0.f; });
  const int wanted[] = {loss_};
  Workspace<float> ws = g.forward(inputs, Mode::train, wanted);
  rec.loss = ws.value(loss_)[0];
  for (int id : stage_loss_) rec.stage_loss.push_back(ws.value(id)[0]);
  if (!std::isfinite(rec.loss)) throw NonFiniteLossError(step_, rec.loss);
  if (rec.all_masked) ++masked_batches_;
  g.backward(ws, loss_);
  adam_.step(g.parameters(), rec.lr);
  ++step_;
  return rec;
}

bool Trainer::probe_due() const {
  if (step_ == 0) return false;
  const int every = cfg_.probe_every > 0 ? cfg_.probe_every : cfg_.iterations_per_epoch;
  return step_ % every == 0 || finished();
}

std::vector<KeypointSet> predict_poses(const Graph<float>& g, int heatmaps, const NetworkConfig& net,
                                       std::span<const TrainExample> examples, const FlipPairs& pairs,
                                       int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("predict: batch size must be >= 1");
  std::vector<KeypointSet> out;
  const std::size_t chunk = static_cast<std::size_t>(batch_size);
  for (std::size_t first = 0; first < examples.size(); first += chunk) {
    const std::size_t last = std::min(examples.size(), first + chunk);
    std::vector<Image> crops;
    std::vector<Affine> image_from_crop;
    for (std::size_t i = first; i < last; ++i) {
      Sample s = make_sample(examples[i].image, examples[i].pose, AugmentParams{}, net.input_w, net.input_h, pairs);
      image_from_crop.push_back(s.crop_from_image.inverse());
      crops.push_back(std::move(s.image));
    }
    std::vector<Tensor<float>> inputs(g.inputs().size());
    inputs[0] = input_batch(crops);
    const int wanted[] = {heatmaps};
    const Workspace<float> ws = g.evaluate(inputs, wanted);
    const Tensor<float>& heat = ws.value(heatmaps);
    for (std::size_t i = 0; i < crops.size(); ++i) {
      HeatmapStack h = heatmaps_of(heat, static_cast<int>(i));
      h.to_image = image_from_crop[i] * h.to_image;
      out.push_back(decode(h, std::nullopt, pairs, examples[first + i].pose.bbox_score));
    }
  }
  return out;
}

PckReport box_pck(std::span<const KeypointSet> pred, std::span<const TrainExample> examples, double threshold) {
  if (pred.size() != examples.size()) throw std::invalid_argument("box_pck: prediction count mismatch");
  std::vector<PckSample> samples;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Box& b = examples[i].pose.bbox;
    samples.push_back({pred[i].joints, examples[i].pose.joints, std::max(b.w, b.h)});
  }
  return pck(samples, threshold);
}

std::vector<KeypointSet> Trainer::predict() const {
  return predict_poses(model_.graph, model_.outputs.back(), net_, examples_, pairs_, cfg_.batch_size);
}

ProbeRecord Trainer::probe() const {
  const std::vector<KeypointSet> pred = predict();
  const PckReport r = box_pck(pred, examples_, kProbeThreshold);
  ProbeRecord rec;
  rec.step = step_;
  rec.epoch = static_cast<int>(step_ / cfg_.iterations_per_epoch);
  rec.pck = r.overall;
  for (int n : r.labeled) rec.joints += n;
  return rec;
}

void Trainer::run(const std::function<void(const StepRecord&)>& on_step,
                  const std::function<void(const ProbeRecord&)>& on_probe) {
  while (!finished()) {
    const StepRecord r = step();
    if (on_step) on_step(r);
    if (probe_due() && on_probe) on_probe(probe());
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  const auto& params = model_.graph.parameters();
  const auto& moments = adam_.moments();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<float>& p = params[i];
    c.put(param_key(p.name), tensor_cast<float>(p.value));
    if (i < moments.size() && !moments[i].m.empty()) {
      c.put("adam.m/" + p.name, Tensor<float>(p.value.shape(), moments[i].m));
      c.put("adam.v/" + p.name, Tensor<float>(p.value.shape(), moments[i].v));
    }
  }
  c.put("train/step", Tensor<double>(Shape{1, 1, 1, 1}, static_cast<double>(step_)));
  c.put("train/adam_t", Tensor<double>(Shape{1, 1, 1, 1}, static_cast<double>(adam_.steps())));
  c.put("train/masked_batches", Tensor<double>(Shape{1, 1, 1, 1}, masked_batches_));
  return c;
}

void load_weights(Graph<float>& g, const Checkpoint& ckpt) {
  for (Parameter<float>& p : g.parameters()) {
    const std::string key = param_key(p.name);
    if (!ckpt.contains(key)) throw CheckpointError("checkpoint lacks parameter '" + p.name + "'");
    Tensor<float> v = ckpt.get<float>(key);
    if (v.shape() != p.value.shape()) {
      throw CheckpointError("parameter '" + p.name + "' has shape " + to_string(v.shape()) + ", expected " +
                            to_string(p.value.shape()));
    }
    std::copy(v.data().begin(), v.data().end(), p.value.data().begin());
  }
}

void Trainer::restore(const Checkpoint& ckpt) {
  const auto scalar = [&](const std::string& key) {
    if (!ckpt.contains(key)) throw CheckpointError("checkpoint lacks '" + key + "'");
    return ckpt.get<double>(key)[0];
  };
  const double step = scalar("train/step");
  if (step < 0 || step > static_cast<double>(cfg_.total_steps())) {
    throw CheckpointError("checkpoint step " + num(step) + " is outside this run's " +
                          std::to_string(cfg_.total_steps()) + " steps");
  }
  Graph<float>& g = model_.graph;
  load_weights(g, ckpt);
  auto& moments = adam_.moments();
  moments.assign(g.parameters().size(), AdamMoments<float>{});
  for (std::size_t i = 0; i < g.parameters().size(); ++i) {
    const Parameter<float>& p = g.parameters()[i];
    if (!p.trainable) continue;
    const std::string m = "adam.m/" + p.name, v = "adam.v/" + p.name;
    if (!ckpt.contains(m) || !ckpt.contains(v)) throw CheckpointError("checkpoint lacks Adam moments of '" + p.name + "'");
    const Tensor<float> mt = ckpt.get<float>(m), vt = ckpt.get<float>(v);
    if (mt.size() != p.value.size() || vt.size() != p.value.size()) {
      throw CheckpointError("Adam moments of '" + p.name + "' have the wrong size");
    }
    moments[i].m.assign(mt.data().begin(), mt.data().end());
    moments[i].v.assign(vt.data().begin(), vt.data().end());
  }
  adam_.set_steps(static_cast<std::int64_t>(scalar("train/adam_t")));
  step_ = static_cast<std::int64_t>(step);
  masked_batches_ = static_cast<int>(scalar("train/masked_batches"));
}

}  // namespace rsn
