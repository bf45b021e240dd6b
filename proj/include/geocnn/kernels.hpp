#pragma once

#include <cstddef>
#include <span>

// Raw compute kernels. Every kernel exists twice: `serial` is the plain
// reference implementation kept for testing, `omp` is the OpenMP data-parallel
// version used at runtime. Both produce bitwise-identical results: parallelism
// only splits independent output elements, never a single reduction.
namespace geocnn::kernels {

struct ConvGeometry {
  std::size_t height;
  std::size_t width;
  std::size_t channels;
  std::size_t kernel_h;
  std::size_t kernel_w;
  std::size_t stride;

  std::size_t out_height() const { return (height - kernel_h) / stride + 1; }
  std::size_t out_width() const { return (width - kernel_w) / stride + 1; }
  std::size_t patch_size() const { return kernel_h * kernel_w * channels; }
};

struct PoolGeometry {
  std::size_t height;
  std::size_t width;
  std::size_t channels;
  std::size_t window;
  std::size_t stride;

  std::size_t out_height() const { return (height - window) / stride + 1; }
  std::size_t out_width() const { return (width - window) / stride + 1; }
};

struct AdamParams {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct RmspropParams {
  double lr;
  double rho;
  double eps;
};

#define GEOCNN_KERNEL_DECLS                                                                     \
  template <typename T>                                                                         \
  void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,        \
              std::size_t k, std::size_t n);                                                    \
  template <typename T>                                                                         \
  void im2col(std::span<const T> image, const ConvGeometry& g, std::span<T> cols);              \
  template <typename T>                                                                         \
  void col2im(std::span<const T> cols, const ConvGeometry& g, std::span<T> image);              \
  template <typename T>                                                                         \
  void maxpool_forward(std::span<const T> in, const PoolGeometry& g, std::span<T> out,          \
                       std::span<std::size_t> argmax);                                          \
  template <typename T>                                                                         \
  void sgd_update(std::span<T> theta, std::span<const T> grad, double lr);                      \
  template <typename T>                                                                         \
  void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v, \
                   const AdamParams& p);                                                        \
  template <typename T>                                                                         \
  void rmsprop_update(std::span<T> theta, std::span<const T> grad, std::span<T> v,              \
                      const RmspropParams& p);

namespace serial {
GEOCNN_KERNEL_DECLS
}  // namespace serial

namespace omp {
GEOCNN_KERNEL_DECLS
}  // namespace omp

#undef GEOCNN_KERNEL_DECLS

// Runtime dispatch: the parallel variants.
using omp::adam_update;
using omp::col2im;
using omp::im2col;
using omp::matmul;
using omp::maxpool_forward;
using omp::rmsprop_update;
using omp::sgd_update;

// Number of worker threads the omp variants will use (1 without OpenMP).
int max_threads();
void set_num_threads(int n);

// Keeps the per-sample im2col/col2im buffers on the heap instead of fresh
// mmap pages (glibc only; a no-op elsewhere). Call once at program start.
void tune_allocator();

}  // namespace geocnn::kernels
