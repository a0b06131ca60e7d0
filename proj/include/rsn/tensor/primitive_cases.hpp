#pragma once

// Randomized single-primitive graphs for finite-difference verification.
// Shared by the unit tests, the acceptance gate and `rsn gradcheck`.

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rsn/tensor/grad_check.hpp"

namespace rsn {

struct GradCase {
  std::string label;  // primitive name plus the sampled shape
  Graph<double> graph;
  std::vector<Tensor<double>> inputs;
  int output = -1;
  GradCheckOptions options;
};

/// Names accepted by make_primitive_case.
const std::vector<std::string>& differentiable_primitives();

/// Builds one case with a random small shape (every extent <= 8).
GradCase make_primitive_case(std::string_view primitive, std::mt19937_64& rng);

struct GradSuiteLine {
  std::string label;
  int cases = 0;
  int failures = 0;
  std::size_t skipped = 0;  // kink-crossing perturbations left out
  double worst = 0;
};

/// Uniform [-1, 1] values for every parameter; running variances in [0.5, 1.5].
void randomize_parameters(Graph<double>& g, std::mt19937_64& rng);

GradCheckReport run_case(const GradCase& c, double tolerance);

/// Runs `cases_per_primitive` random cases for every primitive.
std::vector<GradSuiteLine> primitive_grad_suite(int cases_per_primitive, std::uint64_t seed, double tolerance);

}  // namespace rsn
