#pragma once

#include <cstddef>
#include <vector>

#include "geocnn/layers.hpp"

namespace geocnn {

// Ordered chain of layers, itself usable as a layer. An empty chain is the
// identity map.
template <typename T>
class Sequential final : public Layer<T> {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(LayerPtr<T> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Layer<T>& at(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& at(std::size_t i) const { return *layers_.at(i); }

  LayerKind kind() const override { return LayerKind::sequential; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  void initialize(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) override;
  LayerPtr<T> clone() const override { return std::make_unique<Sequential>(*this); }
  nlohmann::json describe() const override;
  void set_trainable(bool trainable) override;

 private:
  std::vector<LayerPtr<T>> layers_;
  bool forwarded_ = false;
};

// out = F(x) + shortcut(x), with F = conv1x1 -> relu -> conv1x1 and the
// shortcut either the identity or a 1x1 projection conv.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(std::size_t in_channels, std::size_t out_channels, bool projection);

  LayerKind kind() const override { return LayerKind::residual; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  void initialize(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) override;
  LayerPtr<T> clone() const override { return std::make_unique<ResidualBlock>(*this); }
  nlohmann::json describe() const override;
  void set_trainable(bool trainable) override;

  Sequential<T>& residual() { return residual_; }
  Sequential<T>& shortcut() { return shortcut_; }

 private:
  std::size_t in_channels_, out_channels_;
  bool projection_;
  Sequential<T> residual_;
  Sequential<T> shortcut_;
};

// One inception branch. A conv branch is an optional 1x1 reduction
// (followed by relu) then a kernel x kernel conv; a pool branch is a
// kernel x kernel stride-1 max pool then a 1x1 conv. Either way the spatial
// output is (H - kernel + 1) x (W - kernel + 1).
struct BranchSpec {
  enum class Kind { conv, pool };
  Kind kind = Kind::conv;
  std::size_t kernel = 1;
  std::size_t channels = 1;
  std::size_t reduce = 0;  // conv branches only; 0 = no reduction

  static BranchSpec conv(std::size_t kernel, std::size_t channels, std::size_t reduce = 0) {
    return {Kind::conv, kernel, channels, reduce};
  }
  static BranchSpec pool(std::size_t kernel, std::size_t channels) {
    return {Kind::pool, kernel, channels, 0};
  }
};

// Parallel branches on the same input, concatenated along channels.
template <typename T>
class InceptionBlock final : public Layer<T> {
 public:
  InceptionBlock(std::size_t in_channels, std::vector<BranchSpec> branches);

  LayerKind kind() const override { return LayerKind::inception; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true) override;
  void initialize(Rng& rng) override;
  void collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) override;
  LayerPtr<T> clone() const override { return std::make_unique<InceptionBlock>(*this); }
  nlohmann::json describe() const override;
  void set_trainable(bool trainable) override;

  std::size_t out_channels() const;
  Sequential<T>& branch(std::size_t i) { return branches_.at(i); }

 private:
  Tensor<T> concat(const std::vector<Tensor<T>>& parts) const;

  std::size_t in_channels_;
  std::vector<BranchSpec> specs_;
  std::vector<Sequential<T>> branches_;
  Shape cached_output_shape_;
};

// Rebuilds a layer (parameters zeroed) from its describe() record.
template <typename T>
LayerPtr<T> layer_from_json(const nlohmann::json& j);

}  // namespace geocnn
