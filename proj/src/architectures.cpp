#include "geocnn/architectures.hpp"

#include <string>

namespace geocnn {

template <typename T>
Network<T> build_baseline_cnn(const Shape& input_shape, std::size_t num_classes, Rng& rng) {
  Network<T> net(input_shape, num_classes);
  net.set_architecture("cnn");
  const std::size_t filters[] = {32, 64, 128};
  std::size_t channels = input_shape.at(2);
  for (std::size_t stage = 0; stage < 3; ++stage) {
    try {
      net.add(std::make_unique<Conv2D<T>>(channels, filters[stage], 3));
      net.add(std::make_unique<ReLU<T>>());
      net.add(std::make_unique<MaxPool2D<T>>(2, 2));
    } catch (const BuildError& e) {
      throw BuildError("baseline CNN: input " + shape_to_string(input_shape) +
                       " too small at convolution stage " + std::to_string(stage + 1) + " (" +
                       std::to_string(filters[stage]) + " filters): " + e.what());
    }
    channels = filters[stage];
  }
  net.add(std::make_unique<Flatten<T>>());
  net.add(std::make_unique<Dense<T>>(net.shape_chain().back()[0], 64));
  net.add(std::make_unique<ReLU<T>>());
  net.add(std::make_unique<Dense<T>>(64, num_classes));
  net.add(std::make_unique<SoftmaxCrossEntropy<T>>(num_classes));
  net.validate();
  net.initialize(rng);
  return net;
}

namespace {

template <typename T>
void add_downsample(Network<T>& net) {
  net.add(std::make_unique<ReLU<T>>());
  const Shape& s = net.shape_chain().back();
  if (s[0] >= 2 && s[1] >= 2) net.add(std::make_unique<MaxPool2D<T>>(2, 2));
}

template <typename T>
void add_classifier(Network<T>& net, std::size_t num_classes) {
  net.add(std::make_unique<Flatten<T>>());
  net.add(std::make_unique<Dense<T>>(net.shape_chain().back()[0], num_classes));
  net.add(std::make_unique<SoftmaxCrossEntropy<T>>(num_classes));
  net.validate();
}

}  // namespace

template <typename T>
Network<T> build_mini_resnet(const std::vector<ResidualStage>& stages, const Shape& input_shape,
                             std::size_t num_classes, Rng& rng) {
  if (stages.empty()) throw BuildError("mini-resnet needs at least one stage");
  Network<T> net(input_shape, num_classes);
  net.set_architecture("mini-resnet");
  std::size_t channels = input_shape.at(2);
  for (const auto& stage : stages) {
    net.add(std::make_unique<ResidualBlock<T>>(channels, stage.channels, stage.projection));
    add_downsample(net);
    channels = stage.channels;
  }
  add_classifier(net, num_classes);
  net.initialize(rng);
  return net;
}

template <typename T>
Network<T> build_mini_inception(const std::vector<std::vector<BranchSpec>>& blocks,
                                const Shape& input_shape, std::size_t num_classes, Rng& rng) {
  if (blocks.empty()) throw BuildError("mini-inception needs at least one block");
  Network<T> net(input_shape, num_classes);
  net.set_architecture("mini-inception");
  std::size_t channels = input_shape.at(2);
  for (const auto& branches : blocks) {
    auto block = std::make_unique<InceptionBlock<T>>(channels, branches);
    channels = block->out_channels();
    net.add(std::move(block));
    add_downsample(net);
  }
  add_classifier(net, num_classes);
  net.initialize(rng);
  return net;
}

template <typename T>
Network<T> replace_head(const Network<T>& net, std::size_t new_classes, bool freeze_below,
                        Rng& rng) {
  const std::size_t n = net.size();
  if (n < 2 || net.layer(n - 1).kind() != LayerKind::softmax_ce ||
      net.layer(n - 2).kind() != LayerKind::dense) {
    throw BuildError("replace_head: network does not end in dense -> softmax_ce");
  }
  const auto& old_head = static_cast<const Dense<T>&>(net.layer(n - 2));

  Network<T> out(net.input_shape(), new_classes);
  out.set_architecture(net.architecture());
  if (new_classes == net.num_classes()) out.set_class_names(net.class_names());
  for (std::size_t i = 0; i + 2 < n; ++i) {
    auto layer = net.layer(i).clone();
    layer->set_trainable(!freeze_below);
    out.add(std::move(layer));
  }
  auto head = std::make_unique<Dense<T>>(old_head.inputs(), new_classes);
  head->initialize(rng);
  out.add(std::move(head));
  out.add(std::make_unique<SoftmaxCrossEntropy<T>>(new_classes));
  out.validate();
  return out;
}

std::vector<ResidualStage> default_resnet_stages() { return {{16, true}, {32, true}}; }

std::vector<std::vector<BranchSpec>> default_inception_blocks() {
  return {
      {BranchSpec::conv(3, 8), BranchSpec::conv(3, 8, 4), BranchSpec::pool(3, 8)},
      {BranchSpec::conv(3, 16), BranchSpec::conv(3, 16, 8), BranchSpec::pool(3, 16)},
  };
}

bool is_known_architecture(std::string_view name) {
  return name == "cnn" || name == "mini-resnet" || name == "mini-inception";
}

template <typename T>
Network<T> build_architecture(std::string_view name, const Shape& input_shape,
                              std::size_t num_classes, Rng& rng) {
  if (name == "cnn") return build_baseline_cnn<T>(input_shape, num_classes, rng);
  if (name == "mini-resnet") {
    return build_mini_resnet<T>(default_resnet_stages(), input_shape, num_classes, rng);
  }
  if (name == "mini-inception") {
    return build_mini_inception<T>(default_inception_blocks(), input_shape, num_classes, rng);
  }
  throw BuildError("unknown architecture '" + std::string(name) +
                   "' (expected cnn, mini-resnet or mini-inception)");
}

#define GEOCNN_INSTANTIATE(T)                                                                  \
  template Network<T> build_baseline_cnn<T>(const Shape&, std::size_t, Rng&);                     \
  template Network<T> build_mini_resnet<T>(const std::vector<ResidualStage>&, const Shape&,    \
                                           std::size_t, Rng&);                                 \
  template Network<T> build_mini_inception<T>(const std::vector<std::vector<BranchSpec>>&,     \
                                              const Shape&, std::size_t, Rng&);                \
  template Network<T> replace_head<T>(const Network<T>&, std::size_t, bool, Rng&);             \
  template Network<T> build_architecture<T>(std::string_view, const Shape&, std::size_t, Rng&);

GEOCNN_INSTANTIATE(float)
GEOCNN_INSTANTIATE(double)
#undef GEOCNN_INSTANTIATE

}  // namespace geocnn
