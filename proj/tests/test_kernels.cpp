#include <cstring>
#include <vector>

#include "doctest.h"
#include "geocnn/kernels.hpp"
#include "geocnn/rng.hpp"

using namespace geocnn;
namespace k = geocnn::kernels;

namespace {

template <typename T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

}  // namespace

TEST_CASE_TEMPLATE("matmul: serial equals a triple loop and omp equals serial bitwise", T, float,
                   double) {
  const std::size_t shapes[][3] = {{1, 1, 1}, {5, 7, 3}, {37, 19, 65}, {200, 288, 64}, {64, 3, 129}};
  std::uint64_t seed = 1;
  for (const auto& s : shapes) {
    const std::size_t m = s[0], kk = s[1], n = s[2];
    const auto a = random_vector<T>(m * kk, seed++), b = random_vector<T>(kk * n, seed++);
    std::vector<T> oracle(m * n), cs(m * n), co(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        T acc = 0;
        for (std::size_t p = 0; p < kk; ++p) acc += a[i * kk + p] * b[p * n + j];
        oracle[i * n + j] = acc;
      }
    k::serial::matmul<T>(a, b, cs, m, kk, n);
    k::omp::matmul<T>(a, b, co, m, kk, n);
    CHECK(bitwise_equal(cs, oracle));
    CHECK(bitwise_equal(co, cs));
  }
}

TEST_CASE_TEMPLATE("im2col / col2im: omp equals serial bitwise", T, float, double) {
  const k::ConvGeometry geoms[] = {{9, 8, 3, 3, 3, 1}, {32, 32, 16, 3, 3, 1}, {11, 11, 4, 2, 3, 2}};
  std::uint64_t seed = 11;
  for (const auto& g : geoms) {
    const std::size_t rows = g.out_height() * g.out_width();
    const auto img = random_vector<T>(g.height * g.width * g.channels, seed++);
    std::vector<T> cs(rows * g.patch_size()), co(cs.size());
    k::serial::im2col<T>(img, g, cs);
    k::omp::im2col<T>(img, g, co);
    CHECK(bitwise_equal(cs, co));

    const auto cols = random_vector<T>(rows * g.patch_size(), seed++);
    std::vector<T> is(img.size()), io(img.size());
    k::serial::col2im<T>(cols, g, is);
    k::omp::col2im<T>(cols, g, io);
    CHECK(bitwise_equal(is, io));
  }
}

TEST_CASE("maxpool picks the first maximum") {
  const k::PoolGeometry g{2, 2, 1, 2, 2};
  const std::vector<float> in{3, 3, 1, 3};
  std::vector<float> out(1);
  std::vector<std::size_t> arg(1);
  k::serial::maxpool_forward<float>(in, g, out, arg);
  CHECK(out[0] == 3.0f);
  CHECK(arg[0] == 0);
}

TEST_CASE("maxpool: omp equals serial") {
  const k::PoolGeometry g{33, 31, 8, 2, 2};
  const auto in = random_vector<float>(33 * 31 * 8, 5);
  const std::size_t n = g.out_height() * g.out_width() * g.channels;
  std::vector<float> os(n), oo(n);
  std::vector<std::size_t> as(n), ao(n);
  k::serial::maxpool_forward<float>(in, g, os, as);
  k::omp::maxpool_forward<float>(in, g, oo, ao);
  CHECK(bitwise_equal(os, oo));
  CHECK(as == ao);
}

TEST_CASE_TEMPLATE("optimizer updates: omp equals serial bitwise", T, float, double) {
  const std::size_t n = 100000;
  const auto grad = random_vector<T>(n, 21);
  auto t1 = random_vector<T>(n, 22), t2 = t1;
  k::serial::sgd_update<T>(t1, grad, 0.01);
  k::omp::sgd_update<T>(t2, grad, 0.01);
  CHECK(bitwise_equal(t1, t2));

  std::vector<T> m1(n), v1(n), m2(n), v2(n);
  const k::AdamParams ap{1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001};
  k::serial::adam_update<T>(t1, grad, m1, v1, ap);
  k::omp::adam_update<T>(t2, grad, m2, v2, ap);
  CHECK(bitwise_equal(t1, t2));
  CHECK(bitwise_equal(v1, v2));

  const k::RmspropParams rp{1e-3, 0.9, 1e-8};
  k::serial::rmsprop_update<T>(t1, grad, v1, rp);
  k::omp::rmsprop_update<T>(t2, grad, v2, rp);
  CHECK(bitwise_equal(t1, t2));
}
