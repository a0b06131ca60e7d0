#include "rsn/tensor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rsn {

namespace {

[[noreturn]] void shape_fail(const std::string& op, const std::string& what) {
  throw ShapeError(op + ": " + what);
}

std::string dim(const char* name, int got, int want) {
  return std::string(name) + " is " + std::to_string(got) + ", expected " + std::to_string(want);
}

// C(M x N) += A(M x K) * B(K x N), all row-major and contiguous.
template <typename T>
void gemm_acc(int M, int N, int K, const T* A, const T* B, T* C) {
  constexpr int kColBlock = 512;
  for (int j0 = 0; j0 < N; j0 += kColBlock) {
    const int jn = std::min(N, j0 + kColBlock) - j0;
    int i = 0;
    for (; i + 4 <= M; i += 4) {
      T* c0 = C + static_cast<std::size_t>(i) * N + j0;
      T* c1 = c0 + N;
      T* c2 = c1 + N;
      T* c3 = c2 + N;
      const T* a0 = A + static_cast<std::size_t>(i) * K;
      const T* a1 = a0 + K;
      const T* a2 = a1 + K;
      const T* a3 = a2 + K;
      for (int k = 0; k < K; ++k) {
        const T* b = B + static_cast<std::size_t>(k) * N + j0;
        const T v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
        for (int j = 0; j < jn; ++j) {
          const T bj = b[j];
          c0[j] += v0 * bj;
          c1[j] += v1 * bj;
          c2[j] += v2 * bj;
          c3[j] += v3 * bj;
        }
      }
    }
    for (; i < M; ++i) {
      T* c = C + static_cast<std::size_t>(i) * N + j0;
      const T* a = A + static_cast<std::size_t>(i) * K;
      for (int k = 0; k < K; ++k) {
        const T* b = B + static_cast<std::size_t>(k) * N + j0;
        const T v = a[k];
        for (int j = 0; j < jn; ++j) c[j] += v * b[j];
      }
    }
  }
}

// Same contract as gemm_acc but sums each output in double before rounding
// once, so forward convolutions stay within a few ulp of an exact reference.
template <typename T>
void gemm_acc_wide(int M, int N, int K, const T* A, const T* B, T* C) {
  constexpr int kColBlock = 256;
  double acc[4][kColBlock];
  for (int j0 = 0; j0 < N; j0 += kColBlock) {
    const int jn = std::min(N, j0 + kColBlock) - j0;
    for (int i = 0; i < M; i += 4) {
      const int rows = std::min(4, M - i);
      for (int r = 0; r < rows; ++r) {
        const T* c = C + static_cast<std::size_t>(i + r) * N + j0;
        for (int j = 0; j < jn; ++j) acc[r][j] = c[j];
      }
      if (rows == 4) {
        const T* a0 = A + static_cast<std::size_t>(i) * K;
        const T* a1 = a0 + K;
        const T* a2 = a1 + K;
        const T* a3 = a2 + K;
        for (int k = 0; k < K; ++k) {
          const T* b = B + static_cast<std::size_t>(k) * N + j0;
          const double v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
          for (int j = 0; j < jn; ++j) {
            const double bj = b[j];
            acc[0][j] += v0 * bj;
            acc[1][j] += v1 * bj;
            acc[2][j] += v2 * bj;
            acc[3][j] += v3 * bj;
          }
        }
      } else {
        for (int r = 0; r < rows; ++r) {
          const T* a = A + static_cast<std::size_t>(i + r) * K;
          for (int k = 0; k < K; ++k) {
            const T* b = B + static_cast<std::size_t>(k) * N + j0;
            const double v = a[k];
            for (int j = 0; j < jn; ++j) acc[r][j] += v * static_cast<double>(b[j]);
          }
        }
      }
      for (int r = 0; r < rows; ++r) {
        T* c = C + static_cast<std::size_t>(i + r) * N + j0;
        for (int j = 0; j < jn; ++j) c[j] = static_cast<T>(acc[r][j]);
      }
    }
  }
}

template <typename T>
void transpose(int rows, int cols, const T* src, T* dst) {
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      dst[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
}

// Unfolds one image (C, H, W) into (C*k*k, Ho*Wo).
template <typename T>
void im2col(const T* img, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* col) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * P;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          T* out = row + static_cast<std::size_t>(oy) * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(out, out + Wo, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * H + iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            out[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, T* img) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * P;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          T* dst = img + (static_cast<std::size_t>(c) * H + iy) * W;
          const T* in = row + static_cast<std::size_t>(oy) * Wo;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(int k, int stride, int pad) { return k == 1 && stride == 1 && pad == 0; }

void check_conv_args(const char* op, const Shape& x, const Shape& w, int stride, int pad,
                     int expected_in) {
  if (w.h != w.w) shape_fail(op, "kernel must be square, got " + to_string(w));
  if (w.h < 1) shape_fail(op, "kernel size must be >= 1");
  if (stride < 1) shape_fail(op, "stride must be >= 1");
  if (pad < 0) shape_fail(op, "padding must be >= 0");
  if (expected_in != x.c) shape_fail(op, dim("input channels (C_in)", x.c, expected_in));
  if (conv_out_extent(x.h, w.h, stride, pad) < 1 || conv_out_extent(x.w, w.w, stride, pad) < 1) {
    shape_fail(op, "input spatial size " + std::to_string(x.h) + "x" + std::to_string(x.w) +
                       " too small for kernel " + std::to_string(w.h));
  }
}

template <typename T>
std::size_t bcast_index(const Shape& y, int n, int c, int h, int w) {
  const int yn = y.n == 1 ? 0 : n;
  const int yc = y.c == 1 ? 0 : c;
  const int yh = y.h == 1 ? 0 : h;
  const int yw = y.w == 1 ? 0 : w;
  return ((static_cast<std::size_t>(yn) * y.c + yc) * y.h + yh) * y.w + yw;
}

template <typename T>
T sigmoid_scalar(T v) {
  if (v >= 0) {
    const T e = std::exp(-v);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(v);
  return e / (T(1) + e);
}

}  // namespace

int conv_out_extent(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

// ---------------------------------------------------------------- conv2d

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, int stride,
                 int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  check_conv_args("conv2d", xs, ws, stride, pad, ws.c);
  if (bias && bias->size() != static_cast<std::size_t>(ws.n)) {
    shape_fail("conv2d", dim("bias length", static_cast<int>(bias->size()), ws.n));
  }
  const int k = ws.h;
  const int Ho = conv_out_extent(xs.h, k, stride, pad);
  const int Wo = conv_out_extent(xs.w, k, stride, pad);
  const int Co = ws.n;
  const int K = xs.c * k * k;
  const int P = Ho * Wo;
  Tensor<T> y(Shape{xs.n, Co, Ho, Wo});
  std::vector<T> col;
  if (!is_pointwise(k, stride, pad)) col.resize(static_cast<std::size_t>(K) * P);
  for (int n = 0; n < xs.n; ++n) {
    const T* img = x.ptr() + x.offset(n, 0, 0, 0);
    const T* B = img;
    if (!col.empty()) {
      im2col(img, xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, col.data());
      B = col.data();
    }
    T* out = y.ptr() + y.offset(n, 0, 0, 0);
    if (bias) {
      for (int co = 0; co < Co; ++co) std::fill(out + co * P, out + (co + 1) * P, (*bias)[co]);
    }
    gemm_acc_wide(Co, P, K, weight.ptr(), B, out);
  }
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy, int stride,
                     int pad, std::span<T> dx, std::span<T> dweight, std::span<T> dbias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const int k = ws.h;
  const int Co = ws.n;
  const int Ho = dy.shape().h;
  const int Wo = dy.shape().w;
  const int K = xs.c * k * k;
  const int P = Ho * Wo;
  const bool pointwise = is_pointwise(k, stride, pad);

  std::vector<T> col;
  std::vector<T> colT;
  std::vector<T> dwT;
  std::vector<T> wT;
  std::vector<T> dcol;
  if (!dweight.empty()) {
    if (!pointwise) col.resize(static_cast<std::size_t>(K) * P);
    colT.resize(static_cast<std::size_t>(K) * P);
  }
  if (!dx.empty()) {
    wT.resize(static_cast<std::size_t>(K) * Co);
    transpose(Co, K, weight.ptr(), wT.data());
    dcol.resize(static_cast<std::size_t>(K) * P);
  }
  std::vector<T> dw_acc(dweight.empty() ? 0 : static_cast<std::size_t>(Co) * K, T(0));

  for (int n = 0; n < xs.n; ++n) {
    const T* g = dy.ptr() + dy.offset(n, 0, 0, 0);
    if (!dbias.empty()) {
      for (int co = 0; co < Co; ++co) {
        T s = 0;
        for (int p = 0; p < P; ++p) s += g[static_cast<std::size_t>(co) * P + p];
        dbias[co] += s;
      }
    }
    if (!dweight.empty()) {
      const T* img = x.ptr() + x.offset(n, 0, 0, 0);
      const T* B = img;
      if (!pointwise) {
        im2col(img, xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, col.data());
        B = col.data();
      }
      // dW(Co x K) += dY(Co x P) * colT(P x K)
      transpose(K, P, B, colT.data());
      gemm_acc(Co, K, P, g, colT.data(), dw_acc.data());
    }
    if (!dx.empty()) {
      T* dimg = dx.data() + x.offset(n, 0, 0, 0);
      if (pointwise) {
        gemm_acc(K, P, Co, wT.data(), g, dimg);
      } else {
        std::fill(dcol.begin(), dcol.end(), T(0));
        gemm_acc(K, P, Co, wT.data(), g, dcol.data());
        col2im(dcol.data(), xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, dimg);
      }
    }
  }
  for (std::size_t i = 0; i < dw_acc.size(); ++i) dweight[i] += dw_acc[i];
}

// ------------------------------------------------------ depthwise conv2d

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias,
                           int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.n != xs.c) shape_fail("depthwise_conv2d", dim("weight channel count", ws.n, xs.c));
  if (ws.c != 1) shape_fail("depthwise_conv2d", dim("weight input channels per group", ws.c, 1));
  check_conv_args("depthwise_conv2d", xs, ws, stride, pad, xs.c);
  if (bias && bias->size() != static_cast<std::size_t>(ws.n)) {
    shape_fail("depthwise_conv2d", dim("bias length", static_cast<int>(bias->size()), ws.n));
  }
  const int k = ws.h;
  const int Ho = conv_out_extent(xs.h, k, stride, pad);
  const int Wo = conv_out_extent(xs.w, k, stride, pad);
  Tensor<T> y(Shape{xs.n, xs.c, Ho, Wo});
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const T* img = x.ptr() + x.offset(n, c, 0, 0);
      const T* ker = weight.ptr() + static_cast<std::size_t>(c) * k * k;
      T* out = y.ptr() + y.offset(n, c, 0, 0);
      const T b = bias ? (*bias)[c] : T(0);
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          double acc = b;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= xs.w) continue;
              acc += static_cast<double>(ker[ky * k + kx]) * img[iy * xs.w + ix];
            }
          }
          out[oy * Wo + ox] = static_cast<T>(acc);
        }
      }
    }
  }
  return y;
}

template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                               int stride, int pad, std::span<T> dx, std::span<T> dweight,
                               std::span<T> dbias) {
  const Shape xs = x.shape();
  const int k = weight.shape().h;
  const int Ho = dy.shape().h;
  const int Wo = dy.shape().w;
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const T* img = x.ptr() + x.offset(n, c, 0, 0);
      const T* ker = weight.ptr() + static_cast<std::size_t>(c) * k * k;
      const T* g = dy.ptr() + dy.offset(n, c, 0, 0);
      T* dimg = dx.empty() ? nullptr : dx.data() + x.offset(n, c, 0, 0);
      T* dker = dweight.empty() ? nullptr : dweight.data() + static_cast<std::size_t>(c) * k * k;
      T bsum = 0;
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          const T go = g[oy * Wo + ox];
          bsum += go;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= xs.w) continue;
              if (dimg) dimg[iy * xs.w + ix] += ker[ky * k + kx] * go;
              if (dker) dker[ky * k + kx] += img[iy * xs.w + ix] * go;
            }
          }
        }
      }
      if (!dbias.empty()) dbias[c] += bsum;
    }
  }
}

// ------------------------------------------------------------ elementwise

bool broadcastable(const Shape& x, const Shape& y) {
  auto ok = [](int a, int b) { return b == a || b == 1; };
  return ok(x.n, y.n) && ok(x.c, y.c) && ok(x.h, y.h) && ok(x.w, y.w);
}

namespace {

void check_broadcast(const char* op, const Shape& x, const Shape& y) {
  if (broadcastable(x, y)) return;
  const char* names[] = {"N", "C", "H", "W"};
  const int xd[] = {x.n, x.c, x.h, x.w};
  const int yd[] = {y.n, y.c, y.h, y.w};
  for (int i = 0; i < 4; ++i) {
    if (yd[i] != xd[i] && yd[i] != 1) {
      shape_fail(op, std::string("dimension ") + names[i] + " of " + to_string(y) +
                         " does not broadcast to " + to_string(x));
    }
  }
  shape_fail(op, "shapes do not broadcast");
}

}  // namespace

template <typename T>
Tensor<T> elementwise(const Tensor<T>& x, const Tensor<T>& y, BinaryOp op) {
  const Shape xs = x.shape();
  const Shape ys = y.shape();
  check_broadcast("elementwise", xs, ys);
  Tensor<T> z(xs);
  if (xs == ys) {
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = op == BinaryOp::add ? x[i] + y[i] : x[i] * y[i];
    return z;
  }
  std::size_t i = 0;
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int h = 0; h < xs.h; ++h)
        for (int w = 0; w < xs.w; ++w, ++i) {
          const T yv = y[bcast_index<T>(ys, n, c, h, w)];
          z[i] = op == BinaryOp::add ? x[i] + yv : x[i] * yv;
        }
  return z;
}

template <typename T>
void elementwise_backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dz, BinaryOp op,
                          std::span<T> dx, std::span<T> dy) {
  const Shape xs = x.shape();
  const Shape ys = y.shape();
  std::size_t i = 0;
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int h = 0; h < xs.h; ++h)
        for (int w = 0; w < xs.w; ++w, ++i) {
          const std::size_t j = xs == ys ? i : bcast_index<T>(ys, n, c, h, w);
          const T g = dz[i];
          if (op == BinaryOp::add) {
            if (!dx.empty()) dx[i] += g;
            if (!dy.empty()) dy[j] += g;
          } else {
            if (!dx.empty()) dx[i] += g * y[j];
            if (!dy.empty()) dy[j] += g * x[i];
          }
        }
}

// ------------------------------------------------------------- activation

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  Tensor<T> y(x.shape());
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
  }
  return y;
}

template <typename T>
void activation_backward(const Tensor<T>& y, const Tensor<T>& dy, Activation kind,
                         std::span<T> dx) {
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] > T(0)) dx[i] += dy[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
  }
}

// ------------------------------------------------------------------- pool

template <typename T>
Tensor<T> pool(const Tensor<T>& x, PoolKind kind) {
  const Shape xs = x.shape();
  if (kind == PoolKind::global_avg) {
    if (xs.h < 1 || xs.w < 1) shape_fail("global_avg_pool", "empty spatial extent");
    Tensor<T> y(Shape{xs.n, xs.c, 1, 1});
    const std::size_t P = xs.plane();
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const T* p = x.ptr() + x.offset(n, c, 0, 0);
        T s = 0;
        for (std::size_t i = 0; i < P; ++i) s += p[i];
        y(n, c, 0, 0) = s / static_cast<T>(P);
      }
    return y;
  }
  if (xs.h < 3 || xs.w < 3) {
    shape_fail("max_pool3x3s2", "spatial size " + std::to_string(xs.h) + "x" +
                                    std::to_string(xs.w) + " is below the 3x3 window");
  }
  const int Ho = conv_out_extent(xs.h, 3, 2, 1);
  const int Wo = conv_out_extent(xs.w, 3, 2, 1);
  Tensor<T> y(Shape{xs.n, xs.c, Ho, Wo});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * 2 - 1 + ky;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * 2 - 1 + kx;
              if (ix < 0 || ix >= xs.w) continue;
              best = std::max(best, p[iy * xs.w + ix]);
            }
          }
          y(n, c, oy, ox) = best;
        }
    }
  return y;
}

template <typename T>
void pool_backward(const Tensor<T>& x, const Tensor<T>& dy, PoolKind kind, std::span<T> dx) {
  const Shape xs = x.shape();
  if (kind == PoolKind::global_avg) {
    const std::size_t P = xs.plane();
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const T g = dy(n, c, 0, 0) / static_cast<T>(P);
        T* d = dx.data() + x.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < P; ++i) d[i] += g;
      }
    return;
  }
  const int Ho = dy.shape().h;
  const int Wo = dy.shape().w;
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      T* d = dx.data() + x.offset(n, c, 0, 0);
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          // first maximum in scan order receives the gradient
          int arg = -1;
          T best = -std::numeric_limits<T>::infinity();
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * 2 - 1 + ky;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * 2 - 1 + kx;
              if (ix < 0 || ix >= xs.w) continue;
              if (arg < 0 || p[iy * xs.w + ix] > best) {
                best = p[iy * xs.w + ix];
                arg = iy * xs.w + ix;
              }
            }
          }
          d[arg] += dy(n, c, oy, ox);
        }
    }
}

// ---------------------------------------------------------------- resize

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& x, int factor) {
  if (factor < 2) {
    throw std::invalid_argument("resize_nearest: factor must be >= 2, got " +
                                std::to_string(factor));
  }
  const Shape xs = x.shape();
  Tensor<T> y(Shape{xs.n, xs.c, xs.h * factor, xs.w * factor});
  const int Wo = xs.w * factor;
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      T* q = y.ptr() + y.offset(n, c, 0, 0);
      for (int oy = 0; oy < xs.h * factor; ++oy) {
        const T* row = p + (oy / factor) * xs.w;
        T* out = q + static_cast<std::size_t>(oy) * Wo;
        for (int ox = 0; ox < Wo; ++ox) out[ox] = row[ox / factor];
      }
    }
  return y;
}

template <typename T>
void resize_nearest_backward(const Tensor<T>& dy, int factor, const Shape& xs, std::span<T> dx) {
  const int Wo = xs.w * factor;
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* g = dy.ptr() + dy.offset(n, c, 0, 0);
      T* d = dx.data() + ((static_cast<std::size_t>(n) * xs.c + c) * xs.h) * xs.w;
      for (int oy = 0; oy < xs.h * factor; ++oy)
        for (int ox = 0; ox < Wo; ++ox)
          d[(oy / factor) * xs.w + ox / factor] += g[static_cast<std::size_t>(oy) * Wo + ox];
    }
}

// ------------------------------------------------------- concat and split

template <typename T>
Tensor<T> channel_concat(std::span<const Tensor<T>* const> xs) {
  if (xs.empty()) shape_fail("channel_concat", "no inputs");
  const Shape first = xs.front()->shape();
  int channels = 0;
  for (const Tensor<T>* t : xs) {
    const Shape s = t->shape();
    if (s.n != first.n) shape_fail("channel_concat", dim("batch N", s.n, first.n));
    if (s.h != first.h) shape_fail("channel_concat", dim("height H", s.h, first.h));
    if (s.w != first.w) shape_fail("channel_concat", dim("width W", s.w, first.w));
    channels += s.c;
  }
  Tensor<T> y(Shape{first.n, channels, first.h, first.w});
  const std::size_t P = first.plane();
  for (int n = 0; n < first.n; ++n) {
    T* dst = y.ptr() + y.offset(n, 0, 0, 0);
    for (const Tensor<T>* t : xs) {
      const std::size_t len = static_cast<std::size_t>(t->shape().c) * P;
      const T* src = t->ptr() + t->offset(n, 0, 0, 0);
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  return y;
}

template <typename T>
Tensor<T> channel_slice(const Tensor<T>& x, int begin, int count) {
  const Shape xs = x.shape();
  if (begin < 0 || count < 1 || begin + count > xs.c) {
    shape_fail("channel_slice", "channels [" + std::to_string(begin) + ", " +
                                    std::to_string(begin + count) + ") outside C = " +
                                    std::to_string(xs.c));
  }
  Tensor<T> y(Shape{xs.n, count, xs.h, xs.w});
  const std::size_t len = static_cast<std::size_t>(count) * xs.plane();
  for (int n = 0; n < xs.n; ++n) {
    const T* src = x.ptr() + x.offset(n, begin, 0, 0);
    std::copy(src, src + len, y.ptr() + y.offset(n, 0, 0, 0));
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> channel_split(const Tensor<T>& x, int parts) {
  if (parts < 1 || x.shape().c % parts != 0) {
    shape_fail("channel_split", "channel count C = " + std::to_string(x.shape().c) +
                                    " is not divisible into " + std::to_string(parts) + " parts");
  }
  const int width = x.shape().c / parts;
  std::vector<Tensor<T>> out;
  out.reserve(parts);
  for (int i = 0; i < parts; ++i) out.push_back(channel_slice(x, i * width, width));
  return out;
}

template <typename T>
void channel_slice_backward(const Tensor<T>& dy, int begin, const Shape& xs, std::span<T> dx) {
  const int count = dy.shape().c;
  const std::size_t len = static_cast<std::size_t>(count) * xs.plane();
  for (int n = 0; n < xs.n; ++n) {
    const T* g = dy.ptr() + dy.offset(n, 0, 0, 0);
    T* d = dx.data() + ((static_cast<std::size_t>(n) * xs.c + begin) * xs.h) * xs.w;
    for (std::size_t i = 0; i < len; ++i) d[i] += g[i];
  }
}

// -------------------------------------------------------------- batchnorm

namespace {

void check_bn_param(const Shape& p, int c, const char* what) {
  if (p != Shape{1, c, 1, 1}) shape_fail("batchnorm", std::string(what) + " shape " + to_string(p) +
                                                          " must be (1, " + std::to_string(c) +
                                                          ", 1, 1)");
}

template <typename T>
Tensor<T> bn_apply(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                   const std::vector<T>& mean, const std::vector<T>& inv_std) {
  const Shape xs = x.shape();
  Tensor<T> y(xs);
  const std::size_t P = xs.plane();
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      T* q = y.ptr() + y.offset(n, c, 0, 0);
      const T scale = gamma[c] * inv_std[c];
      const T shift = beta[c] - mean[c] * scale;
      for (std::size_t i = 0; i < P; ++i) q[i] = p[i] * scale + shift;
    }
  return y;
}

}  // namespace

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                    BatchNormCache<T>* cache) {
  if (mode == Mode::eval) return batchnorm_eval(x, gamma, beta, running_mean, running_var, cache);
  const Shape xs = x.shape();
  check_bn_param(gamma.shape(), xs.c, "gamma");
  check_bn_param(beta.shape(), xs.c, "beta");
  check_bn_param(running_mean.shape(), xs.c, "running mean");
  check_bn_param(running_var.shape(), xs.c, "running variance");
  if (xs.n < 2) {
    throw std::invalid_argument("batchnorm: train mode needs batch size N >= 2, got N = " +
                                std::to_string(xs.n));
  }
  const std::size_t P = xs.plane();
  const double count = static_cast<double>(xs.n) * P;
  std::vector<T> mean(xs.c), inv_std(xs.c);
  for (int c = 0; c < xs.c; ++c) {
    double s = 0;
    for (int n = 0; n < xs.n; ++n) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < P; ++i) s += p[i];
    }
    const double mu = s / count;
    double v = 0;
    for (int n = 0; n < xs.n; ++n) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < P; ++i) {
        const double d = p[i] - mu;
        v += d * d;
      }
    }
    const double var = v / count;
    mean[c] = static_cast<T>(mu);
    inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
    const double unbiased = count > 1 ? v / (count - 1) : var;
    running_mean[c] = static_cast<T>((1 - kBatchNormMomentum) * running_mean[c] + kBatchNormMomentum * mu);
    running_var[c] = static_cast<T>((1 - kBatchNormMomentum) * running_var[c] + kBatchNormMomentum * unbiased);
  }
  Tensor<T> y = bn_apply(x, gamma, beta, mean, inv_std);
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                         const Tensor<T>& running_mean, const Tensor<T>& running_var,
                         BatchNormCache<T>* cache) {
  const Shape xs = x.shape();
  check_bn_param(gamma.shape(), xs.c, "gamma");
  check_bn_param(beta.shape(), xs.c, "beta");
  check_bn_param(running_mean.shape(), xs.c, "running mean");
  check_bn_param(running_var.shape(), xs.c, "running variance");
  std::vector<T> mean(xs.c), inv_std(xs.c);
  for (int c = 0; c < xs.c; ++c) {
    mean[c] = running_mean[c];
    inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + kBatchNormEps));
  }
  Tensor<T> y = bn_apply(x, gamma, beta, mean, inv_std);
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
void batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const BatchNormCache<T>& cache,
                        const Tensor<T>& dy, Mode mode, std::span<T> dx, std::span<T> dgamma,
                        std::span<T> dbeta) {
  const Shape xs = x.shape();
  const std::size_t P = xs.plane();
  const double count = static_cast<double>(xs.n) * P;
  for (int c = 0; c < xs.c; ++c) {
    const double mu = cache.mean[c];
    const double is = cache.inv_std[c];
    double sum_g = 0, sum_gx = 0;
    for (int n = 0; n < xs.n; ++n) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      const T* g = dy.ptr() + dy.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < P; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * (p[i] - mu) * is;
      }
    }
    if (!dgamma.empty()) dgamma[c] += static_cast<T>(sum_gx);
    if (!dbeta.empty()) dbeta[c] += static_cast<T>(sum_g);
    if (dx.empty()) continue;
    const double gm = gamma[c];
    for (int n = 0; n < xs.n; ++n) {
      const T* p = x.ptr() + x.offset(n, c, 0, 0);
      const T* g = dy.ptr() + dy.offset(n, c, 0, 0);
      T* d = dx.data() + x.offset(n, c, 0, 0);
      if (mode == Mode::eval) {
        for (std::size_t i = 0; i < P; ++i) d[i] += static_cast<T>(g[i] * gm * is);
      } else {
        for (std::size_t i = 0; i < P; ++i) {
          const double xhat = (p[i] - mu) * is;
          d[i] += static_cast<T>(gm * is / count * (count * g[i] - sum_g - xhat * sum_gx));
        }
      }
    }
  }
}

// ------------------------------------------------------------ prm_combine

template <typename T>
Tensor<T> prm_combine(const Tensor<T>& kx, const Tensor<T>& alpha, const Tensor<T>& beta) {
  const Shape ks = kx.shape();
  if (beta.shape() != ks) {
    shape_fail("prm_combine", "beta shape " + to_string(beta.shape()) + " must equal " + to_string(ks));
  }
  check_broadcast("prm_combine", ks, alpha.shape());
  const Shape as = alpha.shape();
  Tensor<T> y(ks);
  std::size_t i = 0;
  for (int n = 0; n < ks.n; ++n)
    for (int c = 0; c < ks.c; ++c)
      for (int h = 0; h < ks.h; ++h)
        for (int w = 0; w < ks.w; ++w, ++i)
          y[i] = kx[i] * (T(1) + beta[i] * alpha[bcast_index<T>(as, n, c, h, w)]);
  return y;
}

template <typename T>
void prm_combine_backward(const Tensor<T>& kx, const Tensor<T>& alpha, const Tensor<T>& beta,
                          const Tensor<T>& dy, std::span<T> dkx, std::span<T> dalpha,
                          std::span<T> dbeta) {
  const Shape ks = kx.shape();
  const Shape as = alpha.shape();
  std::size_t i = 0;
  for (int n = 0; n < ks.n; ++n)
    for (int c = 0; c < ks.c; ++c)
      for (int h = 0; h < ks.h; ++h)
        for (int w = 0; w < ks.w; ++w, ++i) {
          const std::size_t j = bcast_index<T>(as, n, c, h, w);
          const T g = dy[i];
          if (!dkx.empty()) dkx[i] += g * (T(1) + beta[i] * alpha[j]);
          if (!dbeta.empty()) dbeta[i] += g * kx[i] * alpha[j];
          if (!dalpha.empty()) dalpha[j] += g * kx[i] * beta[i];
        }
}

// ------------------------------------------------------------ reductions

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.data()) s += v;
  return Tensor<T>(Shape{1, 1, 1, 1}, s);
}

template <typename T>
Tensor<T> masked_mse(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& mask) {
  const Shape ps = pred.shape();
  if (target.shape() != ps) {
    shape_fail("masked_mse", "target shape " + to_string(target.shape()) + " must equal " + to_string(ps));
  }
  if (mask.shape() != Shape{ps.n, ps.c, 1, 1}) {
    shape_fail("masked_mse", "mask shape " + to_string(mask.shape()) + " must be (N, K, 1, 1) = (" +
                                 std::to_string(ps.n) + ", " + std::to_string(ps.c) + ", 1, 1)");
  }
  const std::size_t P = ps.plane();
  double active = 0;
  double total = 0;
  for (int n = 0; n < ps.n; ++n)
    for (int c = 0; c < ps.c; ++c) {
      const T m = mask(n, c, 0, 0);
      if (m == T(0)) continue;
      active += m;
      const T* p = pred.ptr() + pred.offset(n, c, 0, 0);
      const T* t = target.ptr() + target.offset(n, c, 0, 0);
      double s = 0;
      for (std::size_t i = 0; i < P; ++i) {
        const double d = static_cast<double>(p[i]) - t[i];
        s += d * d;
      }
      total += m * s;
    }
  const double loss = active > 0 ? total / (active * static_cast<double>(P)) : 0.0;
  return Tensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(loss));
}

template <typename T>
void masked_mse_backward(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& mask,
                         T dloss, std::span<T> dpred) {
  const Shape ps = pred.shape();
  const std::size_t P = ps.plane();
  double active = 0;
  for (T m : mask.data()) active += m;
  if (active <= 0) return;
  const double scale = 2.0 * dloss / (active * static_cast<double>(P));
  for (int n = 0; n < ps.n; ++n)
    for (int c = 0; c < ps.c; ++c) {
      const T m = mask(n, c, 0, 0);
      if (m == T(0)) continue;
      const T* p = pred.ptr() + pred.offset(n, c, 0, 0);
      const T* t = target.ptr() + target.offset(n, c, 0, 0);
      T* d = dpred.data() + pred.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < P; ++i) d[i] += static_cast<T>(scale * m * (p[i] - t[i]));
    }
}

#define RSN_INSTANTIATE(T)                                                                      \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, int, int);    \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int, \
                                std::span<T>, std::span<T>, std::span<T>);                      \
  template Tensor<T> depthwise_conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, int, \
                                      int);                                                     \
  template void depthwise_conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                          int, int, std::span<T>, std::span<T>, std::span<T>);   \
  template Tensor<T> elementwise(const Tensor<T>&, const Tensor<T>&, BinaryOp);                 \
  template void elementwise_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                     BinaryOp, std::span<T>, std::span<T>);                     \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                  \
  template void activation_backward(const Tensor<T>&, const Tensor<T>&, Activation, std::span<T>); \
  template Tensor<T> pool(const Tensor<T>&, PoolKind);                                          \
  template void pool_backward(const Tensor<T>&, const Tensor<T>&, PoolKind, std::span<T>);      \
  template Tensor<T> resize_nearest(const Tensor<T>&, int);                                     \
  template void resize_nearest_backward(const Tensor<T>&, int, const Shape&, std::span<T>);     \
  template Tensor<T> channel_concat(std::span<const Tensor<T>* const>);                         \
  template Tensor<T> channel_slice(const Tensor<T>&, int, int);                                 \
  template std::vector<Tensor<T>> channel_split(const Tensor<T>&, int);                         \
  template void channel_slice_backward(const Tensor<T>&, int, const Shape&, std::span<T>);      \
  template Tensor<T> batchnorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, \
                               Tensor<T>&, Mode, BatchNormCache<T>*);                           \
  template Tensor<T> batchnorm_eval(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                    const Tensor<T>&, const Tensor<T>&, BatchNormCache<T>*);    \
  template void batchnorm_backward(const Tensor<T>&, const Tensor<T>&, const BatchNormCache<T>&, \
                                   const Tensor<T>&, Mode, std::span<T>, std::span<T>,          \
                                   std::span<T>);                                               \
  template Tensor<T> prm_combine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template void prm_combine_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                     const Tensor<T>&, std::span<T>, std::span<T>, std::span<T>); \
  template Tensor<T> sum_all(const Tensor<T>&);                                                 \
  template Tensor<T> masked_mse(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
  template void masked_mse_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T,    \
                                    std::span<T>);

RSN_INSTANTIATE(float)
RSN_INSTANTIATE(double)

#undef RSN_INSTANTIATE

}  // namespace rsn
