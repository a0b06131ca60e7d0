#include "rsn/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace rsn {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) +
         ", " + std::to_string(s.w) + ")";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative extent in shape " + to_string(shape));
  }
  data_.assign(shape.numel(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape.numel()) {
    throw ShapeError("buffer holds " + std::to_string(data_.size()) + " values but shape " +
                     to_string(shape) + " needs " + std::to_string(shape.numel()));
  }
}

template <typename T>
void Tensor<T>::ensure_grad() {
  if (!has_grad_) {
    grad_.assign(data_.size(), T(0));
    has_grad_ = true;
  }
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (has_grad_) std::fill(grad_.begin(), grad_.end(), T(0));
}

template <typename T>
void Tensor<T>::drop_grad() {
  grad_.clear();
  grad_.shrink_to_fit();
  has_grad_ = false;
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (!has_grad_) throw std::logic_error("tensor has no gradient buffer");
  return grad_;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad_) throw std::logic_error("tensor has no gradient buffer");
  return grad_;
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

template class Tensor<float>;
template class Tensor<double>;
template bool all_finite<float>(std::span<const float>);
template bool all_finite<double>(std::span<const double>);

}  // namespace rsn
