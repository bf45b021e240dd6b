#include "geocnn/network.hpp"

namespace geocnn {

template <typename T>
Network<T>::Network(Shape input_shape, std::size_t num_classes)
    : input_shape_(std::move(input_shape)), num_classes_(num_classes) {
  if (input_shape_.size() != 3) {
    throw BuildError("network input must be H x W x C, got " + shape_to_string(input_shape_));
  }
  if (num_classes_ < 2) throw BuildError("network needs at least 2 classes");
}

template <typename T>
Network<T>::Network(const Network& other)
    : input_shape_(other.input_shape_),
      num_classes_(other.num_classes_),
      shapes_(other.shapes_),
      architecture_(other.architecture_),
      class_names_(other.class_names_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
void Network<T>::add(LayerPtr<T> layer) {
  const Shape& in = shapes_.empty() ? input_shape_ : shapes_.back();
  Shape out;
  try {
    out = layer->output_shape(in);
  } catch (const ShapeError& e) {
    throw BuildError("layer " + std::to_string(layers_.size()) + " (" +
                     std::string(to_string(layer->kind())) + ") cannot take input " +
                     shape_to_string(in) + ": " + e.what());
  }
  layers_.push_back(std::move(layer));
  shapes_.push_back(std::move(out));
}

template <typename T>
void Network<T>::validate() const {
  if (layers_.empty() || layers_.back()->kind() != LayerKind::softmax_ce) {
    throw BuildError("network must end with a softmax_ce layer");
  }
  if (shapes_.back() != Shape{num_classes_}) {
    throw BuildError("network output " + shape_to_string(shapes_.back()) + " does not match " +
                     std::to_string(num_classes_) + " classes");
  }
}

template <typename T>
void Network<T>::set_class_names(std::vector<std::string> names) {
  if (!names.empty() && names.size() != num_classes_) {
    throw BuildError("got " + std::to_string(names.size()) + " class names for " +
                     std::to_string(num_classes_) + " classes");
  }
  class_names_ = std::move(names);
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

template <typename T>
Tensor<T> Network<T>::predict_proba(const Tensor<T>& x) const {
  if (x.shape() != input_shape_) {
    throw ShapeError("network expects input " + shape_to_string(input_shape_) + ", got " +
                     shape_to_string(x.shape()));
  }
  Tensor<T> y = x;
  for (const auto& l : layers_) y = l->infer(y);
  return y;
}

template <typename T>
Tensor<T> Network<T>::logits(const Tensor<T>& x) const {
  validate();
  if (x.shape() != input_shape_) {
    throw ShapeError("network expects input " + shape_to_string(input_shape_) + ", got " +
                     shape_to_string(x.shape()));
  }
  Tensor<T> y = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) y = layers_[i]->infer(y);
  return y;
}

template <typename T>
std::pair<T, Tensor<T>> Network<T>::accumulate_gradients(const Tensor<T>& x, std::size_t label) {
  validate();
  if (x.shape() != input_shape_) {
    throw ShapeError("network expects input " + shape_to_string(input_shape_) + ", got " +
                     shape_to_string(x.shape()));
  }
  Tensor<T> y = x;
  for (auto& l : layers_) y = l->forward(y);
  auto& head = static_cast<SoftmaxCrossEntropy<T>&>(*layers_.back());
  auto [loss, g] = head.loss_and_gradient(label);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) {
    g = layers_[i]->backward(g, i > 0);
  }
  return {loss, std::move(y)};
}

template <typename T>
std::vector<NamedParam<T>> Network<T>::parameters() {
  std::vector<NamedParam<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params("layers." + std::to_string(i) + ".", out);
  }
  return out;
}

template <typename T>
std::vector<NamedParam<T>> Network<T>::parameters() const {
  return const_cast<Network*>(this)->parameters();
}

template <typename T>
std::size_t Network<T>::parameter_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& np : parameters()) {
    if (!trainable_only || np.param->trainable) n += np.param->value.size();
  }
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& np : parameters()) np.param->grad.fill(T{0});
}

template <typename T>
void Network<T>::scale_grads(T factor) {
  for (auto& np : parameters()) np.param->grad *= factor;
}

template <typename T>
nlohmann::json Network<T>::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) layers.push_back(l->describe());
  return {{"architecture", architecture_},
          {"input_shape", input_shape_},
          {"num_classes", num_classes_},
          {"class_names", class_names_},
          {"layers", layers}};
}

template <typename T>
Network<T> Network<T>::from_description(const nlohmann::json& j) {
  try {
    Network net(j.at("input_shape").get<Shape>(), j.at("num_classes").get<std::size_t>());
    net.set_architecture(j.value("architecture", std::string("custom")));
    net.set_class_names(j.value("class_names", std::vector<std::string>{}));
    for (const auto& lj : j.at("layers")) net.add(layer_from_json<T>(lj));
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw BuildError(std::string("malformed network descriptor: ") + e.what());
  }
}

template <typename T>
double parameter_checksum(const Network<T>& net) {
  double s = 0.0;
  for (const auto& np : net.parameters())
    for (T v : np.param->value.data()) s += static_cast<double>(v);
  return s;
}

template class Network<float>;
template class Network<double>;
template double parameter_checksum(const Network<float>&);
template double parameter_checksum(const Network<double>&);

}  // namespace geocnn
