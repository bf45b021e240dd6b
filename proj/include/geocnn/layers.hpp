#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "geocnn/rng.hpp"
#include "geocnn/tensor.hpp"

namespace geocnn {

enum class LayerKind {
  conv2d,
  maxpool2d,
  flatten,
  dense,
  relu,
  softmax_ce,
  sequential,
  residual,
  inception,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  explicit Param(Shape shape) : value(shape), grad(std::move(shape)) {}
};

template <typename T>
struct NamedParam {
  std::string name;
  Param<T>* param;
};

// Xavier/Glorot uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
struct GlorotUniform {
  std::size_t fan_in;
  std::size_t fan_out;

  double bound() const;
  double sample(Rng& rng) const { return rng.uniform(-bound(), bound()); }
};

template <typename T>
void glorot_fill(Tensor<T>& t, const GlorotUniform& init, Rng& rng);

// A differentiable layer operating on one sample at a time.
//
// forward() caches what backward() needs; infer() computes the same output
// without touching the cache, so it is safe to call concurrently. backward()
// adds parameter gradients into Param::grad (callers zero them per batch) and
// returns the gradient with respect to the layer input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) = 0;

  virtual void initialize(Rng& /*rng*/) {}
  virtual void collect_params(const std::string& /*prefix*/, std::vector<NamedParam<T>>& /*out*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json describe() const = 0;

  virtual void set_trainable(bool trainable);
  bool trainable() const { return trainable_; }

  std::vector<NamedParam<T>> named_params(const std::string& prefix = "");
  void zero_grad();

 protected:
  bool trainable_ = true;
};

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

// Valid (unpadded) 2-D convolution over H x W x C inputs, lowered to
// im2col + matmul. Weights are laid out filters x kh x kw x C.
template <typename T>
class Conv2D final : public Layer<T> {
 public:
  Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel_h, std::size_t kernel_w,
         std::size_t stride = 1);
  Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel)
      : Conv2D(in_channels, filters, kernel, kernel) {}

  LayerKind kind() const override { return LayerKind::conv2d; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  void initialize(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) override;
  LayerPtr<T> clone() const override { return std::make_unique<Conv2D>(*this); }
  nlohmann::json describe() const override;

  Param<T>& weights() { return weights_; }
  Param<T>& bias() { return bias_; }
  const Param<T>& weights() const { return weights_; }
  const Param<T>& bias() const { return bias_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t filters() const { return filters_; }

 private:
  Tensor<T> apply(const Tensor<T>& cols, std::size_t out_h, std::size_t out_w) const;

  std::size_t in_channels_, filters_, kernel_h_, kernel_w_, stride_;
  Param<T> weights_;
  Param<T> bias_;
  Tensor<T> cached_cols_;
  Shape cached_input_shape_;
};

template <typename T>
class MaxPool2D final : public Layer<T> {
 public:
  explicit MaxPool2D(std::size_t window = 2, std::size_t stride = 2);

  LayerKind kind() const override { return LayerKind::maxpool2d; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  LayerPtr<T> clone() const override { return std::make_unique<MaxPool2D>(*this); }
  nlohmann::json describe() const override;

 private:
  std::size_t window_, stride_;
  Shape cached_input_shape_;
  std::vector<std::size_t> cached_argmax_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::flatten; }
  Shape output_shape(const Shape& input) const override { return {shape_numel(input)}; }
  Tensor<T> infer(const Tensor<T>& x) const override { return x.reshape({x.size()}); }
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  LayerPtr<T> clone() const override { return std::make_unique<Flatten>(*this); }
  nlohmann::json describe() const override;

 private:
  Shape cached_input_shape_;
};

// out = x^T W + b with W laid out n_in x n_out.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t n_in, std::size_t n_out);

  LayerKind kind() const override { return LayerKind::dense; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  void initialize(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) override;
  LayerPtr<T> clone() const override { return std::make_unique<Dense>(*this); }
  nlohmann::json describe() const override;

  Param<T>& weights() { return weights_; }
  Param<T>& bias() { return bias_; }
  const Param<T>& weights() const { return weights_; }
  const Param<T>& bias() const { return bias_; }
  std::size_t inputs() const { return n_in_; }
  std::size_t outputs() const { return n_out_; }

 private:
  std::size_t n_in_, n_out_;
  Param<T> weights_;
  Param<T> bias_;
  Tensor<T> cached_input_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  LayerPtr<T> clone() const override { return std::make_unique<ReLU>(*this); }
  nlohmann::json describe() const override;

 private:
  Tensor<T> cached_input_;
};

template <typename T>
struct LossResult {
  T loss;
  Tensor<T> probs;
};

// Softmax output layer paired with categorical cross-entropy. forward()
// returns probabilities; loss_and_gradient() gives the loss for a target and
// the combined gradient probs - onehot with respect to the logits.
template <typename T>
class SoftmaxCrossEntropy final : public Layer<T> {
 public:
  explicit SoftmaxCrossEntropy(std::size_t classes) : classes_(classes) {}

  LayerKind kind() const override { return LayerKind::softmax_ce; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  // Plain softmax Jacobian-vector product, for upstream gradients w.r.t. probs.
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  LayerPtr<T> clone() const override { return std::make_unique<SoftmaxCrossEntropy>(*this); }
  nlohmann::json describe() const override;

  std::pair<T, Tensor<T>> loss_and_gradient(std::size_t target) const;
  std::size_t classes() const { return classes_; }

 private:
  std::size_t classes_;
  Tensor<T> cached_logits_;
  Tensor<T> cached_probs_;
};

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target);

}  // namespace geocnn
