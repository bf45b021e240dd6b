#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "geocnn/network.hpp"

namespace geocnn {

struct ResidualStage {
  std::size_t channels;
  bool projection = true;
};

// conv32 3x3 -> relu -> pool2 -> conv64 3x3 -> relu -> pool2 -> conv128 3x3 ->
// relu -> pool2 -> flatten -> dense64 -> relu -> dense K -> softmax.
// Valid convolutions (stride 1), floor pooling, Glorot-uniform weights, zero biases.
template <typename T>
Network<T> build_baseline_cnn(const Shape& input_shape, std::size_t num_classes, Rng& rng);

// Each stage: residual block -> relu -> 2x2 max pool (the pool is skipped once
// the feature map is smaller than 2x2). Ends flatten -> dense K -> softmax.
template <typename T>
Network<T> build_mini_resnet(const std::vector<ResidualStage>& stages, const Shape& input_shape,
                             std::size_t num_classes, Rng& rng);

// Each block: inception branches -> relu -> 2x2 max pool (skipped when too
// small). Ends flatten -> dense K -> softmax.
template <typename T>
Network<T> build_mini_inception(const std::vector<std::vector<BranchSpec>>& blocks,
                                const Shape& input_shape, std::size_t num_classes, Rng& rng);

// Swaps the final dense layer for a freshly initialized one with new_classes
// outputs. With freeze_below every earlier layer becomes non-trainable;
// otherwise every layer is trainable. Non-head parameters are copied bitwise.
template <typename T>
Network<T> replace_head(const Network<T>& net, std::size_t new_classes, bool freeze_below,
                        Rng& rng);

std::vector<ResidualStage> default_resnet_stages();
std::vector<std::vector<BranchSpec>> default_inception_blocks();

// CLI selector: "cnn", "mini-resnet" or "mini-inception" with default settings.
template <typename T>
Network<T> build_architecture(std::string_view name, const Shape& input_shape,
                              std::size_t num_classes, Rng& rng);

bool is_known_architecture(std::string_view name);

}  // namespace geocnn
