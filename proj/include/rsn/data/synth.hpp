#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "rsn/codec/joints.hpp"
#include "rsn/data/image.hpp"
#include "rsn/metrics/coco_io.hpp"

namespace rsn {

struct SynthConfig {
  int width = 160;
  int height = 160;
  double noise = 0.25;  // background noise amplitude
};

struct SynthSample {
  Image image;       // 3 channels
  KeypointSet pose;  // 17 COCO joints in image coordinates, all visible
};

/// Per-(seed, index) generator so any sample can be regenerated on its own.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index);

/// One articulated stick figure on a noisy background. The figure faces the
/// viewer: the person's left limbs are drawn on the image's right in a
/// warm color, right limbs in a cool one.
SynthSample synth_sample(std::uint64_t seed, int index, const SynthConfig& cfg = {});

struct SynthDataset {
  std::vector<Image> images;
  CocoDataset annotations;  // image i has id i + 1 and file "images/%06d.ppm"
};

SynthDataset synth_generate(std::uint64_t seed, int n, const SynthConfig& cfg = {});

/// Writes `dir/images/*.ppm` and `dir/annotations.json`.
void write_dataset(const std::filesystem::path& dir, const SynthDataset& d);

}  // namespace rsn
