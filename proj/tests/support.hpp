#pragma once

// Helpers shared by the test binaries: seeded random tensors and the direct
// loop references that the optimized kernels are compared against.

#include <cmath>
#include <cstdint>
#include <random>

#include "rsn/tensor/tensor.hpp"

namespace rsn::test {

template <typename T>
Tensor<T> random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

inline int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape())) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

// Grouped cross-correlation written as plain nested loops. groups == C_in
// with one input channel per group gives the depthwise case.
template <typename T>
Tensor<T> conv_reference(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int stride, int pad,
                         int groups = 1) {
  const Shape xs = x.shape(), wsh = w.shape();
  const int k = wsh.h;
  const int ho = (xs.h + 2 * pad - k) / stride + 1;
  const int wo = (xs.w + 2 * pad - k) / stride + 1;
  const int cin_g = xs.c / groups, cout_g = wsh.n / groups;
  Tensor<T> y({xs.n, wsh.n, ho, wo});
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < wsh.n; ++co) {
      const int g = co / cout_g;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = bias ? static_cast<double>((*bias)[co]) : 0.0;
          for (int ci = 0; ci < cin_g; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += static_cast<double>(x(n, g * cin_g + ci, iy, ix)) * w(co, ci, ky, kx);
              }
          y(n, co, oy, ox) = static_cast<T>(acc);
        }
    }
  return y;
}

}  // namespace rsn::test
