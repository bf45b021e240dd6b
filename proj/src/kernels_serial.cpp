#include <algorithm>
#include <cmath>

#include "geocnn/kernels.hpp"

namespace geocnn::kernels::serial {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
            std::size_t k, std::size_t n) {
  std::fill(c.begin(), c.end(), T{0});
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      const T* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
void im2col(std::span<const T> image, const ConvGeometry& g, std::span<T> cols) {
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  const std::size_t row_len = g.kernel_w * g.channels;
  std::size_t r = 0;
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox, ++r) {
      T* dst = cols.data() + r * g.patch_size();
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const T* src = image.data() + ((oy * g.stride + ky) * g.width + ox * g.stride) * g.channels;
        std::copy(src, src + row_len, dst + ky * row_len);
      }
    }
  }
}

template <typename T>
void col2im(std::span<const T> cols, const ConvGeometry& g, std::span<T> image) {
  std::fill(image.begin(), image.end(), T{0});
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  const std::size_t row_len = g.kernel_w * g.channels;
  std::size_t r = 0;
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox, ++r) {
      const T* src = cols.data() + r * g.patch_size();
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        T* dst = image.data() + ((oy * g.stride + ky) * g.width + ox * g.stride) * g.channels;
        for (std::size_t q = 0; q < row_len; ++q) dst[q] += src[ky * row_len + q];
      }
    }
  }
}

template <typename T>
void maxpool_forward(std::span<const T> in, const PoolGeometry& g, std::span<T> out,
                     std::span<std::size_t> argmax) {
  const std::size_t oh = g.out_height();
  const std::size_t ow = g.out_width();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::size_t best = ((oy * g.stride) * g.width + ox * g.stride) * g.channels + c;
        for (std::size_t dy = 0; dy < g.window; ++dy) {
          for (std::size_t dx = 0; dx < g.window; ++dx) {
            const std::size_t idx =
                ((oy * g.stride + dy) * g.width + ox * g.stride + dx) * g.channels + c;
            if (in[idx] > in[best]) best = idx;  // strict: first maximum wins
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
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - lr * static_cast<double>(grad[i]));
  }
}

template <typename T>
void adam_update(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamParams& p) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
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
  for (std::size_t i = 0; i < theta.size(); ++i) {
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

}  // namespace geocnn::kernels::serial
