#include "geocnn/layers.hpp"

#include "geocnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geocnn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::softmax_ce: return "softmax_ce";
    case LayerKind::sequential: return "sequential";
    case LayerKind::residual: return "residual";
    case LayerKind::inception: return "inception";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::conv2d, LayerKind::maxpool2d, LayerKind::flatten, LayerKind::dense,
                 LayerKind::relu, LayerKind::softmax_ce, LayerKind::sequential,
                 LayerKind::residual, LayerKind::inception}) {
    if (to_string(k) == name) return k;
  }
  throw BuildError("unknown layer kind '" + std::string(name) + "'");
}

double GlorotUniform::bound() const {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
void glorot_fill(Tensor<T>& t, const GlorotUniform& init, Rng& rng) {
  const double a = init.bound();
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-a, a));
}

// ---- Layer -----------------------------------------------------------------

template <typename T>
void Layer<T>::set_trainable(bool trainable) {
  trainable_ = trainable;
  for (auto& np : named_params()) np.param->trainable = trainable;
}

template <typename T>
std::vector<NamedParam<T>> Layer<T>::named_params(const std::string& prefix) {
  std::vector<NamedParam<T>> out;
  collect_params(prefix, out);
  return out;
}

template <typename T>
void Layer<T>::zero_grad() {
  for (auto& np : named_params()) np.param->grad.fill(T{0});
}

namespace {

void require_forward(bool cached, LayerKind kind) {
  if (!cached) {
    throw StateError(std::string(to_string(kind)) + ": backward called before forward");
  }
}

template <typename T>
void require_shape(const Tensor<T>& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + shape_to_string(expected) + ", got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace

// ---- Conv2D ----------------------------------------------------------------

template <typename T>
Conv2D<T>::Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel_h,
                  std::size_t kernel_w, std::size_t stride)
    : in_channels_(in_channels),
      filters_(filters),
      kernel_h_(kernel_h),
      kernel_w_(kernel_w),
      stride_(stride),
      weights_({filters, kernel_h, kernel_w, in_channels}),
      bias_({filters}) {
  if (stride == 0) throw BuildError("conv2d: stride must be >= 1");
}

template <typename T>
Shape Conv2D<T>::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw ShapeError("conv2d expects an H x W x C input, got " + shape_to_string(input));
  }
  if (input[2] != in_channels_) {
    throw ShapeError("conv2d expects " + std::to_string(in_channels_) + " input channels, got " +
                     std::to_string(input[2]));
  }
  return {conv_output_extent(input[0], kernel_h_, stride_),
          conv_output_extent(input[1], kernel_w_, stride_), filters_};
}

template <typename T>
Tensor<T> Conv2D<T>::apply(const Tensor<T>& cols, std::size_t out_h, std::size_t out_w) const {
  const std::size_t patch = kernel_h_ * kernel_w_ * in_channels_;
  const Tensor<T> w_t = transpose(weights_.value.reshape({filters_, patch}));
  Tensor<T> out = matmul(cols, w_t);
  auto data = out.data();
  const auto b = bias_.value.data();
  for (std::size_t r = 0; r < out_h * out_w; ++r)
    for (std::size_t f = 0; f < filters_; ++f) data[r * filters_ + f] += b[f];
  return out.reshape({out_h, out_w, filters_});
}

template <typename T>
Tensor<T> Conv2D<T>::infer(const Tensor<T>& x) const {
  const Shape out = output_shape(x.shape());
  return apply(im2col(x, kernel_h_, kernel_w_, stride_), out[0], out[1]);
}

template <typename T>
Tensor<T> Conv2D<T>::forward(const Tensor<T>& x) {
  const Shape out = output_shape(x.shape());
  cached_cols_ = im2col(x, kernel_h_, kernel_w_, stride_);
  cached_input_shape_ = x.shape();
  return apply(cached_cols_, out[0], out[1]);
}

template <typename T>
Tensor<T> Conv2D<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_cols_.empty(), this->kind());
  require_shape(grad_out, output_shape(cached_input_shape_), "conv2d backward");
  const std::size_t positions = grad_out.dim(0) * grad_out.dim(1);
  const std::size_t patch = kernel_h_ * kernel_w_ * in_channels_;
  const Tensor<T> g = grad_out.reshape({positions, filters_});

  auto db = bias_.grad.data();
  for (std::size_t r = 0; r < positions; ++r)
    for (std::size_t f = 0; f < filters_; ++f) db[f] += g[r * filters_ + f];

  const Tensor<T> dw = matmul(transpose(g), cached_cols_);
  auto dw_acc = weights_.grad.data();
  for (std::size_t i = 0; i < dw_acc.size(); ++i) dw_acc[i] += dw[i];

  if (!need_input_grad) return {};
  const Tensor<T> dcols = matmul(g, weights_.value.reshape({filters_, patch}));
  return col2im(dcols, cached_input_shape_, kernel_h_, kernel_w_, stride_);
}

template <typename T>
void Conv2D<T>::initialize(Rng& rng) {
  const std::size_t field = kernel_h_ * kernel_w_;
  glorot_fill(weights_.value, GlorotUniform{field * in_channels_, field * filters_}, rng);
  bias_.value.fill(T{0});
}

template <typename T>
void Conv2D<T>::collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  out.push_back({prefix + "W", &weights_});
  out.push_back({prefix + "b", &bias_});
}

template <typename T>
nlohmann::json Conv2D<T>::describe() const {
  return {{"kind", "conv2d"},        {"in_channels", in_channels_}, {"filters", filters_},
          {"kernel_h", kernel_h_},   {"kernel_w", kernel_w_},       {"stride", stride_},
          {"trainable", this->trainable_}};
}

// ---- MaxPool2D -------------------------------------------------------------

template <typename T>
MaxPool2D<T>::MaxPool2D(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window == 0 || stride == 0) throw BuildError("maxpool2d: window and stride must be >= 1");
}

template <typename T>
Shape MaxPool2D<T>::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw ShapeError("maxpool2d expects an H x W x C input, got " + shape_to_string(input));
  }
  if (input[0] < window_ || input[1] < window_) {
    throw ShapeError("maxpool2d: input " + shape_to_string(input) + " smaller than " +
                     std::to_string(window_) + "x" + std::to_string(window_) + " window");
  }
  return {(input[0] - window_) / stride_ + 1, (input[1] - window_) / stride_ + 1, input[2]};
}

template <typename T>
Tensor<T> MaxPool2D<T>::infer(const Tensor<T>& x) const {
  Tensor<T> out(output_shape(x.shape()));
  std::vector<std::size_t> argmax(out.size());
  kernels::maxpool_forward<T>(x.data(), {x.dim(0), x.dim(1), x.dim(2), window_, stride_},
                              out.data(), argmax);
  return out;
}

template <typename T>
Tensor<T> MaxPool2D<T>::forward(const Tensor<T>& x) {
  Tensor<T> out(output_shape(x.shape()));
  cached_argmax_.assign(out.size(), 0);
  kernels::maxpool_forward<T>(x.data(), {x.dim(0), x.dim(1), x.dim(2), window_, stride_},
                              out.data(), cached_argmax_);
  cached_input_shape_ = x.shape();
  return out;
}

template <typename T>
Tensor<T> MaxPool2D<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_input_shape_.empty(), this->kind());
  require_shape(grad_out, output_shape(cached_input_shape_), "maxpool2d backward");
  if (!need_input_grad) return {};
  Tensor<T> dx(cached_input_shape_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) dx[cached_argmax_[o]] += grad_out[o];
  return dx;
}

template <typename T>
nlohmann::json MaxPool2D<T>::describe() const {
  return {{"kind", "maxpool2d"}, {"window", window_}, {"stride", stride_}};
}

// ---- Flatten ---------------------------------------------------------------

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x) {
  cached_input_shape_ = x.shape();
  return x.reshape({x.size()});
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_input_shape_.empty(), this->kind());
  if (!need_input_grad) return {};
  return grad_out.reshape(cached_input_shape_);
}

template <typename T>
nlohmann::json Flatten<T>::describe() const {
  return {{"kind", "flatten"}};
}

// ---- Dense -----------------------------------------------------------------

template <typename T>
Dense<T>::Dense(std::size_t n_in, std::size_t n_out)
    : n_in_(n_in), n_out_(n_out), weights_({n_in, n_out}), bias_({n_out}) {}

template <typename T>
Shape Dense<T>::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != n_in_) {
    throw ShapeError("dense expects a vector of length " + std::to_string(n_in_) + ", got " +
                     shape_to_string(input));
  }
  return {n_out_};
}

template <typename T>
Tensor<T> Dense<T>::infer(const Tensor<T>& x) const {
  output_shape(x.shape());
  Tensor<T> out = matmul(x.reshape({1, n_in_}), weights_.value).reshape({n_out_});
  for (std::size_t j = 0; j < n_out_; ++j) out[j] += bias_.value[j];
  return out;
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) {
  Tensor<T> out = infer(x);
  cached_input_ = x;
  return out;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_input_.empty(), this->kind());
  require_shape(grad_out, Shape{n_out_}, "dense backward");
  auto dw = weights_.grad.data();
  for (std::size_t i = 0; i < n_in_; ++i) {
    const T xi = cached_input_[i];
    for (std::size_t j = 0; j < n_out_; ++j) dw[i * n_out_ + j] += xi * grad_out[j];
  }
  for (std::size_t j = 0; j < n_out_; ++j) bias_.grad[j] += grad_out[j];
  if (!need_input_grad) return {};
  return matmul(weights_.value, grad_out.reshape({n_out_, 1})).reshape({n_in_});
}

template <typename T>
void Dense<T>::initialize(Rng& rng) {
  glorot_fill(weights_.value, GlorotUniform{n_in_, n_out_}, rng);
  bias_.value.fill(T{0});
}

template <typename T>
void Dense<T>::collect_params(const std::string& prefix, std::vector<NamedParam<T>>& out) {
  out.push_back({prefix + "W", &weights_});
  out.push_back({prefix + "b", &bias_});
}

template <typename T>
nlohmann::json Dense<T>::describe() const {
  return {{"kind", "dense"}, {"inputs", n_in_}, {"outputs", n_out_}, {"trainable", this->trainable_}};
}

// ---- ReLU ------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> ReLU<T>::infer(const Tensor<T>& x) const {
  return relu(x);
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x) {
  cached_input_ = x;
  return relu(x);
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_input_.empty(), this->kind());
  require_shape(grad_out, cached_input_.shape(), "relu backward");
  if (!need_input_grad) return {};
  Tensor<T> dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(cached_input_[i] > T{0})) dx[i] = T{0};  // subgradient 0 at x == 0
  }
  return dx;
}

template <typename T>
nlohmann::json ReLU<T>::describe() const {
  return {{"kind", "relu"}};
}

// ---- Softmax + cross-entropy -----------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  const T mx = *std::max_element(logits.data().begin(), logits.data().end());
  Tensor<T> probs = logits;
  T sum{0};
  for (T& v : probs.data()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (T& v : probs.data()) v /= sum;
  return probs;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target) {
  if (logits.rank() != 1) {
    throw ShapeError("softmax expects a logit vector, got " + shape_to_string(logits.shape()));
  }
  if (target >= logits.size()) {
    throw ShapeError("target class " + std::to_string(target) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const T mx = *std::max_element(logits.data().begin(), logits.data().end());
  T sum{0};
  for (T v : logits.data()) sum += std::exp(v - mx);
  // -ln p_t written as log-sum-exp so a vanishing p_t cannot overflow.
  const T loss = std::log(sum) - (logits[target] - mx);
  return {loss, softmax(logits)};
}

template <typename T>
Shape SoftmaxCrossEntropy<T>::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != classes_) {
    throw ShapeError("softmax_ce expects " + std::to_string(classes_) + " logits, got " +
                     shape_to_string(input));
  }
  return input;
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy<T>::infer(const Tensor<T>& x) const {
  output_shape(x.shape());
  return softmax(x);
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy<T>::forward(const Tensor<T>& x) {
  cached_probs_ = infer(x);
  cached_logits_ = x;
  return cached_probs_;
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  require_forward(!cached_probs_.empty(), this->kind());
  require_shape(grad_out, cached_probs_.shape(), "softmax backward");
  if (!need_input_grad) return {};
  const T inner = dot(grad_out, cached_probs_);
  Tensor<T> dx(cached_probs_.shape());
  for (std::size_t k = 0; k < classes_; ++k) dx[k] = cached_probs_[k] * (grad_out[k] - inner);
  return dx;
}

template <typename T>
std::pair<T, Tensor<T>> SoftmaxCrossEntropy<T>::loss_and_gradient(std::size_t target) const {
  require_forward(!cached_probs_.empty(), this->kind());
  auto [loss, probs] = softmax_cross_entropy(cached_logits_, target);
  probs[target] -= T{1};
  return {loss, std::move(probs)};
}

template <typename T>
nlohmann::json SoftmaxCrossEntropy<T>::describe() const {
  return {{"kind", "softmax_ce"}, {"classes", classes_}};
}

#define GEOCNN_INSTANTIATE(T)                                                          \
  template void glorot_fill(Tensor<T>&, const GlorotUniform&, Rng&);                   \
  template class Layer<T>;                                                             \
  template class Conv2D<T>;                                                            \
  template class MaxPool2D<T>;                                                         \
  template class Flatten<T>;                                                           \
  template class Dense<T>;                                                             \
  template class ReLU<T>;                                                              \
  template class SoftmaxCrossEntropy<T>;                                               \
  template Tensor<T> relu(const Tensor<T>&);                                           \
  template Tensor<T> softmax(const Tensor<T>&);                                        \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);

GEOCNN_INSTANTIATE(float)
GEOCNN_INSTANTIATE(double)
#undef GEOCNN_INSTANTIATE

}  // namespace geocnn
