#include <algorithm>
#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "geocnn/kernels.hpp"

namespace geocnn::kernels {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace omp {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileCols = 32;

// One kTileRows x kTileCols block of c, accumulated in registers. Each element
// still sums its products in ascending p, exactly like the serial kernel.
template <typename T>
inline void matmul_tile(const T* a, const T* b, T* c, std::size_t i0, std::size_t j0,
                        std::size_t k, std::size_t n) {
  T acc[kTileRows][kTileCols] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * n + j0;
    for (std::size_t r = 0; r < kTileRows; ++r) {
      const T av = a[(i0 + r) * k + p];
      for (std::size_t jj = 0; jj < kTileCols; ++jj) acc[r][jj] += av * brow[jj];
    }
  }
  for (std::size_t r = 0; r < kTileRows; ++r) {
    std::copy(acc[r], acc[r] + kTileCols, c + (i0 + r) * n + j0);
  }
}

// Edge rows/columns not covered by full tiles.
template <typename T>
inline void matmul_edge(const T* a, const T* b, T* c, std::size_t i, std::size_t j_begin,
                        std::size_t j_end, std::size_t k, std::size_t n) {
  T* crow = c + i * n;
  std::fill(crow + j_begin, crow + j_end, T{0});
  for (std::size_t p = 0; p < k; ++p) {
    const T aip = a[i * k + p];
    const T* brow = b + p * n;
    for (std::size_t j = j_begin; j < j_end; ++j) crow[j] += aip * brow[j];
  }
}

}  // namespace

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
            std::size_t k, std::size_t n) {
  const std::size_t full_rows = m - m % kTileRows;
  const std::size_t full_cols = n - n % kTileCols;
  const std::int64_t row_blocks = static_cast<std::int64_t>(full_rows / kTileRows);
  const bool parallel = m * n * k >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < row_blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kTileRows;
    for (std::size_t j0 = 0; j0 < full_cols; j0 += kTileCols) {
      matmul_tile(a.data(), b.data(), c.data(), i0, j0, k, n);
    }
    if (full_cols < n) {
      for (std::size_t r = 0; r < kTileRows; ++r) {
        matmul_edge(a.data(), b.data(), c.data(), i0 + r, full_cols, n, k, n);
      }
    }
  }
  for (std::size_t i = full_rows; i < m; ++i) {
    matmul_edge(a.data(), b.data(), c.data(), i, 0, n, k, n);
  }
}

template <typename T>
void im2col(std::span<const T> image, const ConvGeometry& g, std::span<T> cols) {
  const std::int64_t oh = static_cast<std::int64_t>(g.out_height());
  const std::size_t ow = g.out_width();
  const std::size_t row_len = g.kernel_w * g.channels;
  const bool parallel = cols.size() >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t r = static_cast<std::size_t>(oy) * ow + ox;
      T* dst = cols.data() + r * g.patch_size();
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const T* src = image.data() +
                       ((static_cast<std::size_t>(oy) * g.stride + ky) * g.width + ox * g.stride) *
                           g.channels;
        std::copy(src, src + row_len, dst + ky * row_len);
      }
    }
  }
}

// Gather formulation: each image element sums its contributions in ascending
// patch-row order, the same order in which the serial scatter adds them.
template <typename T>
void col2im(std::span<const T> cols, const ConvGeometry& g, std::span<T> image) {
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  const std::size_t patch = g.patch_size();
  const std::int64_t height = static_cast<std::int64_t>(g.height);
  const bool parallel = cols.size() >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t ys = 0; ys < height; ++ys) {
    const std::size_t y = static_cast<std::size_t>(ys);
    // Output rows whose receptive field covers image row y.
    const std::size_t oy_lo =
        y + 1 > g.kernel_h ? (y + 1 - g.kernel_h + g.stride - 1) / g.stride : 0;
    const std::size_t oy_hi = std::min(oh, y / g.stride + 1);
    for (std::size_t x = 0; x < g.width; ++x) {
      T* dst = image.data() + (y * g.width + x) * g.channels;
      std::fill(dst, dst + g.channels, T{0});
      const std::size_t ox_lo =
          x + 1 > g.kernel_w ? (x + 1 - g.kernel_w + g.stride - 1) / g.stride : 0;
      const std::size_t ox_hi = std::min(ow, x / g.stride + 1);
      for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
        const std::size_t ky = y - oy * g.stride;
        for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) {
          const std::size_t kx = x - ox * g.stride;
          const T* src =
              cols.data() + (oy * ow + ox) * patch + (ky * g.kernel_w + kx) * g.channels;
          for (std::size_t c = 0; c < g.channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename T>
void maxpool_forward(std::span<const T> in, const PoolGeometry& g, std::span<T> out,
                     std::span<std::size_t> argmax) {
  const std::int64_t oh = static_cast<std::int64_t>(g.out_height());
  const std::size_t ow = g.out_width();
  const bool parallel = in.size() >= kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t oys = 0; oys < oh; ++oys) {
    const std::size_t oy = static_cast<std::size_t>(oys);
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::size_t best = ((oy * g.stride) * g.width + ox * g.stride) * g.channels + c;
        for (std::size_t dy = 0; dy < g.window; ++dy) {
          for (std::size_t dx = 0; dx < g.window; ++dx) {
            const std::size_t idx =
                ((oy * g.stride + dy) * g.width + ox * g.stride + dx) * g.channels + c;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (oy * ow + ox) * g.channels + c;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
}

template <typename T>
void sgd_update(std::span<T> theta, std::span<const T> grad, double lr) {
  const std::int64_t n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for schedule(static) if (theta.size() >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - lr * static_cast<double>(grad[i]));
  }
}

template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamParams& p) {
  const std::int64_t n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for schedule(static) if (theta.size() >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double mi = p.beta1 * static_cast<double>(m[i]) + (1.0 - p.beta1) * g;
    const double vi = p.beta2 * static_cast<double>(v[i]) + (1.0 - p.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / p.bias1;
    const double v_hat = vi / p.bias2;
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                              p.lr * m_hat / (std::sqrt(v_hat) + p.eps));
  }
}

template <typename T>
void rmsprop_update(std::span<T> theta, std::span<const T> grad, std::span<T> v,
                    const RmspropParams& p) {
  const std::int64_t n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for schedule(static) if (theta.size() >= kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double vi = p.rho * static_cast<double>(v[i]) + (1.0 - p.rho) * g * g;
    v[i] = static_cast<T>(vi);
    theta[i] =
        static_cast<T>(static_cast<double>(theta[i]) - p.lr * g / (std::sqrt(vi) + p.eps));
  }
}

#define GEOCNN_INSTANTIATE(T)                                                                \
  template void matmul<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, \
                          std::size_t, std::size_t);                                         \
  template void im2col<T>(std::span<const T>, const ConvGeometry&, std::span<T>);            \
  template void col2im<T>(std::span<const T>, const ConvGeometry&, std::span<T>);            \
  template void maxpool_forward<T>(std::span<const T>, const PoolGeometry&, std::span<T>,    \
                                   std::span<std::size_t>);                                  \
  template void sgd_update<T>(std::span<T>, std::span<const T>, double);                     \
  template void adam_update<T>(std::span<T>, std::span<const T>, std::span<T>, std::span<T>, \
                               const AdamParams&);                                           \
  template void rmsprop_update<T>(std::span<T>, std::span<const T>, std::span<T>,            \
                                  const RmspropParams&);

GEOCNN_INSTANTIATE(float)
GEOCNN_INSTANTIATE(double)
#undef GEOCNN_INSTANTIATE

}  // namespace omp
}  // namespace geocnn::kernels
