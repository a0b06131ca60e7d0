#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsn/tensor/graph.hpp"

namespace rsn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Gradients smaller than this are compared on an absolute scale; below it
  // central differences are dominated by rounding noise.
  double magnitude_floor = 1e-4;
  Mode mode = Mode::train;
  bool check_inputs = true;
  // Inputs treated as constants, e.g. regression targets and masks.
  std::vector<std::string> constant_inputs;
  std::uint64_t probe_seed = 17;
};

struct GradCheckEntry {
  std::string name;  // parameter or input name
  std::size_t elements = 0;
  std::size_t skipped = 0;  // perturbations that crossed a relu/max-pool kink
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
};

/// Compares analytic gradients of the scalar <output, R> (R a fixed random
/// probe) with central finite differences for every trainable parameter and,
/// optionally, every graph input. The graph is copied; the caller's graph is
/// not modified.
GradCheckReport grad_check(const Graph<double>& graph, std::span<const Tensor<double>> inputs,
                           int output, double tolerance, const GradCheckOptions& options = {});

/// Relative error convention used by grad_check.
double gradient_rel_error(double analytic, double numeric, double floor);

}  // namespace rsn
