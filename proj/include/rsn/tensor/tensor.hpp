#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsn {

/// Thrown when operand shapes are incompatible. The message names the
/// offending dimension.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NCHW extent of a tensor.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

enum class DType : std::uint8_t { float32 = 0, float64 = 1 };

template <typename T>
struct dtype_of;
template <>
struct dtype_of<float> {
  static constexpr DType value = DType::float32;
};
template <>
struct dtype_of<double> {
  static constexpr DType value = DType::float64;
};

/// Dense row-major NCHW array with an optional gradient buffer of the same
/// shape.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  static constexpr DType dtype() noexcept { return dtype_of<T>::value; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  std::size_t offset(int n, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& operator()(int n, int c, int h, int w) noexcept { return data_[offset(n, c, h, w)]; }
  T operator()(int n, int c, int h, int w) const noexcept { return data_[offset(n, c, h, w)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  T operator[](std::size_t i) const noexcept { return data_[i]; }

  bool has_grad() const noexcept { return has_grad_; }
  /// Allocates a zeroed gradient buffer if absent.
  void ensure_grad();
  void zero_grad();
  void drop_grad();
  std::span<T> grad();
  std::span<const T> grad() const;

  void fill(T v);

 private:
  Shape shape_{};
  std::vector<T> data_;
  std::vector<T> grad_;
  bool has_grad_ = false;
};

template <typename T>
bool all_finite(std::span<const T> values);

template <typename T>
bool all_finite(const Tensor<T>& t) {
  return all_finite(t.data());
}

/// Converts between float and double tensors (gradient buffer not copied).
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  Tensor<To> out(src.shape());
  auto in = src.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = static_cast<To>(in[i]);
  return out;
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace rsn
