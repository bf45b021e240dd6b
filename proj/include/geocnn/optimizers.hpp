#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "geocnn/layers.hpp"

namespace geocnn {

enum class OptimizerKind { sgd, adam, rmsprop };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double eps = 1e-8;
};

// Per-run optimizer state. Update rules:
//   sgd:     theta -= lr * g
//   adam:    m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2;
//            theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
//   rmsprop: v = rho v + (1-rho) g^2;  theta -= lr * g / (sqrt(v) + eps)
// Moment slots are created on the first step and bound to parameter order;
// non-trainable parameters are skipped entirely (value and slots untouched).
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(std::span<const NamedParam<T>> params);

  const OptimizerConfig& config() const { return config_; }
  std::size_t step_count() const { return steps_; }
  const Tensor<T>& first_moment(std::size_t i) const { return first_.at(i); }
  const Tensor<T>& second_moment(std::size_t i) const { return second_.at(i); }

 private:
  void bind(std::span<const NamedParam<T>> params);

  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<Tensor<T>> first_;
  std::vector<Tensor<T>> second_;
};

}  // namespace geocnn
