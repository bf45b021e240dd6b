#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "geocnn/errors.hpp"

namespace geocnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major array. Images use the channels-last H x W x C convention.
// The shape is fixed at construction; element values may be updated in place
// (parameter updates go through data()). A default-constructed tensor is an
// empty placeholder with no shape.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Same data under a new shape of equal element count.
  Tensor reshape(Shape shape) const;

  void fill(T value);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(T scale);

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

// c = a * b for rank-2 operands; per-element accumulation runs over the inner
// index in ascending order, so results are bitwise reproducible.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b);

// Unrolls every kernel_h x kernel_w x C receptive field of an H x W x C input
// into one row of a (H_out * W_out) x (kernel_h * kernel_w * C) matrix.
template <typename T>
Tensor<T> im2col(const Tensor<T>& input, std::size_t kernel_h, std::size_t kernel_w,
                 std::size_t stride = 1);

// Adjoint of im2col: scatters rows back into an H x W x C tensor additively.
template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, const Shape& image_shape, std::size_t kernel_h,
                 std::size_t kernel_w, std::size_t stride = 1);

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride);

}  // namespace geocnn
