#pragma once

#include <random>
#include <vector>

#include "rsn/arch/config.hpp"
#include "rsn/tensor/primitive_cases.hpp"

namespace rsn {

/// A full RSB (batchnorm in train mode) with random small shape and weights.
GradCase make_rsb_case(int branches, FusionMode fusion, std::mt19937_64& rng);
/// A full PRM with live sigmoid paths.
GradCase make_prm_case(std::mt19937_64& rng);

/// One line per (branch count 2..6, fusion mode) plus one for PRM.
std::vector<GradSuiteLine> block_grad_suite(int cases_per_variant, std::uint64_t seed, double tolerance);

}  // namespace rsn
