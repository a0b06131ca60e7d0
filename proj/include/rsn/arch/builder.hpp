#pragma once

// The architecture is described once, against this interface. GraphBuilder
// turns the description into a runnable Graph; the analyzer's symbolic
// builder turns the same calls into a SymbolicGraph for receptive-field and
// cost accounting.

#include <string>
#include <vector>

namespace rsn {

struct Ref {
  int id = -1;
  int channels = 0;
};

struct ConvSpec {
  int out = 0;
  int kernel = 1;
  int stride = 1;
  int pad = -1;  // -1: kernel / 2
  bool depthwise = false;
  bool bias = false;
  double init_std = 0;  // weight init; 0 selects He-normal

  int padding() const { return pad < 0 ? kernel / 2 : pad; }
};

class ArchBuilder {
 public:
  virtual ~ArchBuilder() = default;

  virtual Ref input(const std::string& name, int channels) = 0;
  virtual Ref conv(Ref x, const ConvSpec& spec, const std::string& name) = 0;
  virtual Ref batchnorm(Ref x, const std::string& name) = 0;
  virtual Ref relu(Ref x) = 0;
  virtual Ref sigmoid(Ref x) = 0;
  virtual Ref add(Ref a, Ref b) = 0;
  virtual Ref prm_combine(Ref kx, Ref alpha, Ref beta) = 0;
  virtual Ref concat(const std::vector<Ref>& xs) = 0;
  virtual Ref slice(Ref x, int begin, int count) = 0;
  virtual Ref max_pool(Ref x) = 0;
  virtual Ref global_avg_pool(Ref x) = 0;
  virtual Ref upsample(Ref x, int factor) = 0;
  virtual void mark_output(Ref x) = 0;
  /// Attaches a label (e.g. "y3") to a value for later lookup.
  virtual void tag(Ref x, const std::string& label) = 0;
};

}  // namespace rsn
