#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geocnn/blocks.hpp"
#include "geocnn/layers.hpp"

namespace geocnn {

// Ordered layer stack for single-sample classification. The final layer is
// always a SoftmaxCrossEntropy over num_classes outputs; shapes are propagated
// (and checked) as layers are added.
template <typename T>
class Network {
 public:
  Network(Shape input_shape, std::size_t num_classes);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Appends a layer; throws BuildError naming the layer index and kind when
  // its input shape is incompatible.
  void add(LayerPtr<T> layer);
  // Throws BuildError unless the last layer is softmax_ce with num_classes outputs.
  void validate() const;

  const Shape& input_shape() const { return input_shape_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
  // Output shape after every layer, in order.
  const std::vector<Shape>& shape_chain() const { return shapes_; }

  const std::string& architecture() const { return architecture_; }
  void set_architecture(std::string name) { architecture_ = std::move(name); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names);

  void initialize(Rng& rng);

  // Class probabilities without touching any layer cache.
  Tensor<T> predict_proba(const Tensor<T>& x) const;
  // Pre-softmax scores, also cache-free.
  Tensor<T> logits(const Tensor<T>& x) const;
  // Forward + backward for one labelled sample; parameter gradients are
  // accumulated, the returned pair is (loss, class probabilities).
  std::pair<T, Tensor<T>> accumulate_gradients(const Tensor<T>& x, std::size_t label);

  std::vector<NamedParam<T>> parameters();
  std::vector<NamedParam<T>> parameters() const;
  std::size_t parameter_count(bool trainable_only = true) const;
  void zero_grad();
  void scale_grads(T factor);

  nlohmann::json describe() const;
  // Rebuilds the structure from describe() output; parameters are zero.
  static Network from_description(const nlohmann::json& j);

 private:
  Shape input_shape_;
  std::size_t num_classes_;
  std::vector<LayerPtr<T>> layers_;
  std::vector<Shape> shapes_;
  std::string architecture_ = "custom";
  std::vector<std::string> class_names_;
};

// Sum of all parameter values, in parameter order (for cheap equality checks).
template <typename T>
double parameter_checksum(const Network<T>& net);

}  // namespace geocnn
