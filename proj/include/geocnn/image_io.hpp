#pragma once

#include <filesystem>

#include "geocnn/tensor.hpp"

namespace geocnn {

using Image = Tensor<float>;  // H x W x 3, values in [0, 1]

// Decodes a PNG or JPEG (chosen by file signature) into an RGB image in
// [0, 1]; grayscale sources are broadcast to three channels. Throws DataError
// naming the file on any failure.
Image read_image(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG (values are clamped and rounded).
void write_png(const std::filesystem::path& path, const Image& image);

bool has_image_extension(const std::filesystem::path& path);

}  // namespace geocnn
