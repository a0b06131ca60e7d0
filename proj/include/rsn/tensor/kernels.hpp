#pragma once

// Forward and backward kernels for every differentiable primitive. Backward
// kernels accumulate into the spans they are given; an empty span skips that
// gradient.

#include <span>
#include <vector>

#include "rsn/tensor/tensor.hpp"

namespace rsn {

enum class Mode { train, eval };
enum class BinaryOp { add, mul };
enum class Activation { relu, sigmoid };
enum class PoolKind { max3x3s2, global_avg };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Output extent of a k x k window sweep: floor((in + 2 pad - k) / stride) + 1.
int conv_out_extent(int in, int kernel, int stride, int pad);

// conv2d: weight is (C_out, C_in, k, k); bias, when given, is (1, C_out, 1, 1).
// Cross-correlation, no kernel flip.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, int stride,
                 int pad);
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, int stride,
                     int pad, std::span<T> dx, std::span<T> dweight, std::span<T> dbias);

// depthwise: weight is (C, 1, k, k); channel c of the output reads only
// channel c of the input.
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias,
                           int stride, int pad);
template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                               int stride, int pad, std::span<T> dx, std::span<T> dweight,
                               std::span<T> dbias);

/// True when every extent of `y` equals the matching extent of `x` or is 1.
bool broadcastable(const Shape& x, const Shape& y);

// y broadcasts over any of its unit extents, e.g. (1, C, 1, 1) or (N, C, 1, 1).
template <typename T>
Tensor<T> elementwise(const Tensor<T>& x, const Tensor<T>& y, BinaryOp op);
template <typename T>
void elementwise_backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dz, BinaryOp op,
                          std::span<T> dx, std::span<T> dy);

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind);
/// `y` is the forward output; relu reads the sign from it, sigmoid uses y(1-y).
template <typename T>
void activation_backward(const Tensor<T>& y, const Tensor<T>& dy, Activation kind,
                         std::span<T> dx);

// max3x3s2 uses padding 1 and requires H, W >= 3.
template <typename T>
Tensor<T> pool(const Tensor<T>& x, PoolKind kind);
template <typename T>
void pool_backward(const Tensor<T>& x, const Tensor<T>& dy, PoolKind kind, std::span<T> dx);

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, int factor);
template <typename T>
void resize_nearest_backward(const Tensor<T>& dy, int factor, const Shape& x_shape,
                             std::span<T> dx);

template <typename T>
Tensor<T> channel_concat(std::span<const Tensor<T>* const> xs);
template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, int begin, int count);
template <typename T>
std::vector<Tensor<T>> channel_split(const Tensor<T>& x, int parts);
/// Adds `dy` (a channel slice gradient) into channels [begin, begin+C) of dx.
template <typename T>
void channel_slice_backward(const Tensor<T>& dy, int begin, const Shape& x_shape, std::span<T> dx);

template <typename T>
struct BatchNormCache {
  std::vector<T> mean;
  std::vector<T> inv_std;
};

// gamma, beta, running_mean and running_var are (1, C, 1, 1). Train mode
// normalizes with biased batch statistics and folds the unbiased variance
// into the running estimate with momentum 0.1.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                    BatchNormCache<T>* cache);
template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var,
                         BatchNormCache<T>* cache);
template <typename T>
void batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const BatchNormCache<T>& cache,
                        const Tensor<T>& dy, Mode mode, std::span<T> dx, std::span<T> dgamma,
                        std::span<T> dbeta);

/// kx * (1 + beta * alpha); alpha broadcasts like `elementwise`.
template <typename T>
Tensor<T> prm_combine(const Tensor<T>& kx, const Tensor<T>& alpha, const Tensor<T>& beta);
template <typename T>
void prm_combine_backward(const Tensor<T>& kx, const Tensor<T>& alpha, const Tensor<T>& beta,
                          const Tensor<T>& dy, std::span<T> dkx, std::span<T> dalpha,
                          std::span<T> dbeta);

/// Sum of all elements as a (1, 1, 1, 1) tensor.
template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);

/// Mean squared error over the (n, k) maps whose mask entry is non-zero.
/// mask is (N, K, 1, 1). An all-zero mask yields 0.
template <typename T>
Tensor<T> masked_mse(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& mask);
template <typename T>
void masked_mse_backward(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& mask,
                         T dloss, std::span<T> dpred);

}  // namespace rsn
