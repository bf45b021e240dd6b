#include "geocnn/tensor.hpp"

#include <sstream>

#include "geocnn/kernels.hpp"

namespace geocnn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be >= 1, got " + shape_to_string(shape));
  }
}

}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_numel(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_extents(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("value count " + std::to_string(data_.size()) + " does not match shape " +
                     shape_to_string(shape_) + " with " + std::to_string(shape_numel(shape_)) +
                     " elements");
  }
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                     shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("cannot add " + shape_to_string(other.shape_) + " into " +
                     shape_to_string(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator*=(T scale) {
  for (T& v : data_) v *= scale;
  return *this;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> c({m, n});
  kernels::matmul<T>(a.data(), b.data(), c.data(), m, k, n);
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_to_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor<T> t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = a[i * n + j];
  return t;
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot size mismatch: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  T s{0};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride) {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (kernel == 0 || input < kernel) {
    throw ShapeError("kernel extent " + std::to_string(kernel) + " does not fit input extent " +
                     std::to_string(input));
  }
  return (input - kernel) / stride + 1;
}

namespace {

kernels::ConvGeometry conv_geometry(const Shape& image, std::size_t kh, std::size_t kw,
                                    std::size_t stride) {
  if (image.size() != 3) {
    throw ShapeError("expected an H x W x C image, got " + shape_to_string(image));
  }
  conv_output_extent(image[0], kh, stride);
  conv_output_extent(image[1], kw, stride);
  return {image[0], image[1], image[2], kh, kw, stride};
}

}  // namespace

template <typename T>
Tensor<T> im2col(const Tensor<T>& input, std::size_t kernel_h, std::size_t kernel_w,
                 std::size_t stride) {
  const auto g = conv_geometry(input.shape(), kernel_h, kernel_w, stride);
  Tensor<T> cols({g.out_height() * g.out_width(), g.patch_size()});
  kernels::im2col<T>(input.data(), g, cols.data());
  return cols;
}

template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, const Shape& image_shape, std::size_t kernel_h,
                 std::size_t kernel_w, std::size_t stride) {
  const auto g = conv_geometry(image_shape, kernel_h, kernel_w, stride);
  if (cols.rank() != 2 || cols.dim(0) != g.out_height() * g.out_width() ||
      cols.dim(1) != g.patch_size()) {
    throw ShapeError("col2im: columns " + shape_to_string(cols.shape()) +
                     " do not match image " + shape_to_string(image_shape));
  }
  Tensor<T> image(image_shape);
  kernels::col2im<T>(cols.data(), g, image.data());
  return image;
}

#define GEOCNN_INSTANTIATE(T)                                                                \
  template class Tensor<T>;                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> transpose(const Tensor<T>&);                                            \
  template T dot(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> im2col(const Tensor<T>&, std::size_t, std::size_t, std::size_t);        \
  template Tensor<T> col2im(const Tensor<T>&, const Shape&, std::size_t, std::size_t,        \
                            std::size_t);

GEOCNN_INSTANTIATE(float)
GEOCNN_INSTANTIATE(double)
#undef GEOCNN_INSTANTIATE

}  // namespace geocnn
