#include "geocnn/blocks.hpp"

namespace geocnn {

// ---- Sequential --------------------------------------------------------------

template <typename T>
Sequential<T>::Sequential(const Sequential& other) : Layer<T>(other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Shape Sequential<T>::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

template <typename T>
Tensor<T> Sequential<T>::infer(const Tensor<T>& x) const {
  Tensor<T> y = x;
  for (const auto& l : layers_) y = l->infer(y);
  return y;
}

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& l : layers_) y = l->forward(y);
  forwarded_ = true;
  return y;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (!forwarded_) throw StateError("sequential: backward called before forward");
  Tensor<T> g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, i > 0 || need_input_grad);
  }
  if (!need_input_grad) return {};
  return g;
}

template <typename T>
void Sequential<T>::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

template <typename T>
void Sequential<T>::collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->collect_params(prefix + std::to_string(i) + ".", out);
  }
}

template <typename T>
nlohmann::json Sequential<T>::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) layers.push_back(l->describe());
  return {{"kind", "sequential"}, {"layers", layers}};
}

template <typename T>
void Sequential<T>::set_trainable(bool trainable) {
  this->trainable_ = trainable;
  for (auto& l : layers_) l->set_trainable(trainable);
}

// ---- ResidualBlock ---------------------------------------------------------

template <typename T>
ResidualBlock<T>::ResidualBlock(std::size_t in_channels, std::size_t out_channels, bool projection)
    : in_channels_(in_channels), out_channels_(out_channels), projection_(projection) {
  if (in_channels != out_channels && !projection) {
    throw BuildError("residual block maps " + std::to_string(in_channels) + " to " +
                     std::to_string(out_channels) +
                     " channels; an identity shortcut needs equal channels (enable projection)");
  }
  residual_.add(std::make_unique<Conv2D<T>>(in_channels, out_channels, 1));
  residual_.add(std::make_unique<ReLU<T>>());
  residual_.add(std::make_unique<Conv2D<T>>(out_channels, out_channels, 1));
  if (projection) shortcut_.add(std::make_unique<Conv2D<T>>(in_channels, out_channels, 1));
}

template <typename T>
Shape ResidualBlock<T>::output_shape(const Shape& input) const {
  const Shape f = residual_.output_shape(input);
  const Shape s = shortcut_.output_shape(input);
  if (f != s) {
    throw ShapeError("residual branch " + shape_to_string(f) + " and shortcut " +
                     shape_to_string(s) + " disagree");
  }
  return f;
}

template <typename T>
Tensor<T> ResidualBlock<T>::infer(const Tensor<T>& x) const {
  Tensor<T> y = residual_.infer(x);
  y += shortcut_.infer(x);
  return y;
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  output_shape(x.shape());
  Tensor<T> y = residual_.forward(x);
  y += shortcut_.forward(x);
  return y;
}

template <typename T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  Tensor<T> g = residual_.backward(grad_out, need_input_grad);
  Tensor<T> gs = shortcut_.backward(grad_out, need_input_grad);
  if (!need_input_grad) return {};
  g += gs;
  return g;
}

template <typename T>
void ResidualBlock<T>::initialize(Rng& rng) {
  residual_.initialize(rng);
  shortcut_.initialize(rng);
}

template <typename T>
void ResidualBlock<T>::collect_params(const std::string& prefix,
                                      std::vector<NamedParam<T>>& out) {
  residual_.collect_params(prefix + "F.", out);
  shortcut_.collect_params(prefix + "shortcut.", out);
}

template <typename T>
nlohmann::json ResidualBlock<T>::describe() const {
  return {{"kind", "residual"},
          {"in_channels", in_channels_},
          {"out_channels", out_channels_},
          {"projection", projection_},
          {"trainable", this->trainable_}};
}

template <typename T>
void ResidualBlock<T>::set_trainable(bool trainable) {
  this->trainable_ = trainable;
  residual_.set_trainable(trainable);
  shortcut_.set_trainable(trainable);
}

// ---- InceptionBlock --------------------------------------------------------

template <typename T>
InceptionBlock<T>::InceptionBlock(std::size_t in_channels, std::vector<BranchSpec> branches)
    : in_channels_(in_channels), specs_(std::move(branches)) {
  if (specs_.empty()) throw BuildError("inception block needs at least one branch");
  for (const auto& s : specs_) {
    if (s.kernel != specs_.front().kernel) {
      throw BuildError("inception branches disagree on spatial extent: kernel " +
                       std::to_string(s.kernel) + " vs " + std::to_string(specs_.front().kernel) +
                       " give different H x W outputs");
    }
    if (s.kernel == 0 || s.channels == 0) {
      throw BuildError("inception branch needs kernel >= 1 and channels >= 1");
    }
    Sequential<T> branch;
    if (s.kind == BranchSpec::Kind::conv) {
      std::size_t c = in_channels;
      if (s.reduce > 0) {
        branch.add(std::make_unique<Conv2D<T>>(in_channels, s.reduce, 1));
        branch.add(std::make_unique<ReLU<T>>());
        c = s.reduce;
      }
      branch.add(std::make_unique<Conv2D<T>>(c, s.channels, s.kernel));
    } else {
      branch.add(std::make_unique<MaxPool2D<T>>(s.kernel, 1));
      branch.add(std::make_unique<Conv2D<T>>(in_channels, s.channels, 1));
    }
    branches_.push_back(std::move(branch));
  }
}

template <typename T>
std::size_t InceptionBlock<T>::out_channels() const {
  std::size_t c = 0;
  for (const auto& s : specs_) c += s.channels;
  return c;
}

template <typename T>
Shape InceptionBlock<T>::output_shape(const Shape& input) const {
  Shape first;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const Shape s = branches_[i].output_shape(input);
    if (i == 0) {
      first = s;
    } else if (s[0] != first[0] || s[1] != first[1]) {
      throw ShapeError("inception branch " + std::to_string(i) + " output " + shape_to_string(s) +
                       " disagrees with " + shape_to_string(first));
    }
  }
  return {first[0], first[1], out_channels()};
}

template <typename T>
Tensor<T> InceptionBlock<T>::concat(const std::vector<Tensor<T>>& parts) const {
  const std::size_t h = parts.front().dim(0), w = parts.front().dim(1);
  const std::size_t total = out_channels();
  Tensor<T> out({h, w, total});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.dim(2);
    for (std::size_t pix = 0; pix < h * w; ++pix) {
      std::copy_n(p.data().begin() + pix * c, c, out.data().begin() + pix * total + offset);
    }
    offset += c;
  }
  return out;
}

template <typename T>
Tensor<T> InceptionBlock<T>::infer(const Tensor<T>& x) const {
  output_shape(x.shape());
  std::vector<Tensor<T>> parts;
  for (const auto& b : branches_) parts.push_back(b.infer(x));
  return concat(parts);
}

template <typename T>
Tensor<T> InceptionBlock<T>::forward(const Tensor<T>& x) {
  cached_output_shape_ = output_shape(x.shape());
  std::vector<Tensor<T>> parts;
  for (auto& b : branches_) parts.push_back(b.forward(x));
  return concat(parts);
}

template <typename T>
Tensor<T> InceptionBlock<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (cached_output_shape_.empty()) throw StateError("inception: backward called before forward");
  if (grad_out.shape() != cached_output_shape_) {
    throw ShapeError("inception backward: expected " + shape_to_string(cached_output_shape_) +
                     ", got " + shape_to_string(grad_out.shape()));
  }
  const std::size_t h = grad_out.dim(0), w = grad_out.dim(1), total = grad_out.dim(2);
  Tensor<T> gx;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const std::size_t c = specs_[i].channels;
    Tensor<T> part({h, w, c});
    for (std::size_t pix = 0; pix < h * w; ++pix) {
      std::copy_n(grad_out.data().begin() + pix * total + offset, c,
                  part.data().begin() + pix * c);
    }
    offset += c;
    Tensor<T> g = branches_[i].backward(part, need_input_grad);
    if (!need_input_grad) continue;
    if (gx.empty()) {
      gx = std::move(g);
    } else {
      gx += g;
    }
  }
  return gx;
}

template <typename T>
void InceptionBlock<T>::initialize(Rng& rng) {
  for (auto& b : branches_) b.initialize(rng);
}

template <typename T>
void InceptionBlock<T>::collect_params(const std::string& prefix,
                                       std::vector<NamedParam<T>>& out) {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i].collect_params(prefix + "branch" + std::to_string(i) + ".", out);
  }
}

template <typename T>
nlohmann::json InceptionBlock<T>::describe() const {
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& s : specs_) {
    branches.push_back({{"type", s.kind == BranchSpec::Kind::conv ? "conv" : "pool"},
                        {"kernel", s.kernel},
                        {"channels", s.channels},
                        {"reduce", s.reduce}});
  }
  return {{"kind", "inception"},
          {"in_channels", in_channels_},
          {"branches", branches},
          {"trainable", this->trainable_}};
}

template <typename T>
void InceptionBlock<T>::set_trainable(bool trainable) {
  this->trainable_ = trainable;
  for (auto& b : branches_) b.set_trainable(trainable);
}

// ---- Descriptor factory ----------------------------------------------------

template <typename T>
LayerPtr<T> layer_from_json(const nlohmann::json& j) {
  LayerPtr<T> layer;
  try {
    const LayerKind kind = layer_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
      case LayerKind::conv2d:
        layer = std::make_unique<Conv2D<T>>(
            j.at("in_channels").get<std::size_t>(), j.at("filters").get<std::size_t>(),
            j.at("kernel_h").get<std::size_t>(), j.at("kernel_w").get<std::size_t>(),
            j.at("stride").get<std::size_t>());
        break;
      case LayerKind::maxpool2d:
        layer = std::make_unique<MaxPool2D<T>>(j.at("window").get<std::size_t>(),
                                               j.at("stride").get<std::size_t>());
        break;
      case LayerKind::flatten: layer = std::make_unique<Flatten<T>>(); break;
      case LayerKind::dense:
        layer = std::make_unique<Dense<T>>(j.at("inputs").get<std::size_t>(),
                                           j.at("outputs").get<std::size_t>());
        break;
      case LayerKind::relu: layer = std::make_unique<ReLU<T>>(); break;
      case LayerKind::softmax_ce:
        layer = std::make_unique<SoftmaxCrossEntropy<T>>(j.at("classes").get<std::size_t>());
        break;
      case LayerKind::sequential: {
        auto seq = std::make_unique<Sequential<T>>();
        for (const auto& child : j.at("layers")) seq->add(layer_from_json<T>(child));
        layer = std::move(seq);
        break;
      }
      case LayerKind::residual:
        layer = std::make_unique<ResidualBlock<T>>(j.at("in_channels").get<std::size_t>(),
                                                   j.at("out_channels").get<std::size_t>(),
                                                   j.at("projection").get<bool>());
        break;
      case LayerKind::inception: {
        std::vector<BranchSpec> specs;
        for (const auto& b : j.at("branches")) {
          BranchSpec s;
          s.kind = b.at("type").get<std::string>() == "pool" ? BranchSpec::Kind::pool
                                                              : BranchSpec::Kind::conv;
          s.kernel = b.at("kernel").get<std::size_t>();
          s.channels = b.at("channels").get<std::size_t>();
          s.reduce = b.value("reduce", std::size_t{0});
          specs.push_back(s);
        }
        layer = std::make_unique<InceptionBlock<T>>(j.at("in_channels").get<std::size_t>(),
                                                    std::move(specs));
        break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BuildError(std::string("malformed layer descriptor: ") + e.what());
  }
  if (!j.value("trainable", true)) layer->set_trainable(false);
  return layer;
}

template class Sequential<float>;
template class Sequential<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;
template class InceptionBlock<float>;
template class InceptionBlock<double>;
template LayerPtr<float> layer_from_json<float>(const nlohmann::json&);
template LayerPtr<double> layer_from_json<double>(const nlohmann::json&);

}  // namespace geocnn
