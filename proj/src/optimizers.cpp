#include "geocnn/optimizers.hpp"

#include <cmath>
#include <string>

#include "geocnn/kernels.hpp"

namespace geocnn {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw Error("unknown optimizer '" + std::string(name) + "' (expected adam, sgd or rmsprop)");
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr > 0.0)) throw Error("learning rate must be > 0");
}

template <typename T>
void Optimizer<T>::bind(std::span<const NamedParam<T>> params) {
  if (first_.empty() && second_.empty()) {
    for (const auto& np : params) {
      first_.emplace_back(np.param->value.shape());
      second_.emplace_back(np.param->value.shape());
    }
    return;
  }
  if (params.size() != first_.size()) {
    throw ShapeError("optimizer bound to " + std::to_string(first_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].param->value.shape() != first_[i].shape()) {
      throw ShapeError("parameter " + params[i].name + " has shape " +
                       shape_to_string(params[i].param->value.shape()) +
                       " but its optimizer slot has " + shape_to_string(first_[i].shape()));
    }
  }
}

template <typename T>
void Optimizer<T>::step(std::span<const NamedParam<T>> params) {
  bind(params);
  for (const auto& np : params) {
    if (np.param->grad.shape() != np.param->value.shape()) {
      throw ShapeError("gradient of " + np.name + " has shape " +
                       shape_to_string(np.param->grad.shape()) + ", parameter has " +
                       shape_to_string(np.param->value.shape()));
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const kernels::AdamParams adam{config_.lr,
                                 config_.beta1,
                                 config_.beta2,
                                 config_.eps,
                                 1.0 - std::pow(config_.beta1, t),
                                 1.0 - std::pow(config_.beta2, t)};
  const kernels::RmspropParams rms{config_.lr, config_.rho, config_.eps};

  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i].param;
    if (!p.trainable) continue;
    switch (config_.kind) {
      case OptimizerKind::sgd:
        kernels::sgd_update<T>(p.value.data(), p.grad.data(), config_.lr);
        break;
      case OptimizerKind::adam:
        kernels::adam_update<T>(p.value.data(), p.grad.data(), first_[i].data(),
                                second_[i].data(), adam);
        break;
      case OptimizerKind::rmsprop:
        kernels::rmsprop_update<T>(p.value.data(), p.grad.data(), second_[i].data(), rms);
        break;
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace geocnn
