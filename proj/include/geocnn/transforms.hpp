#pragma once

#include <cstddef>
#include <string>

#include "geocnn/image_io.hpp"
#include "geocnn/rng.hpp"

namespace geocnn {

// Bilinear resampling with half-pixel centres, no aspect-ratio preservation;
// results are clamped to [0, 1]. Same-size resize is the exact identity.
Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w);

struct Transform {
  enum class Kind { rotate, hflip, vflip, shear };
  Kind kind = Kind::hflip;
  double amount = 0.0;  // degrees for rotate, shear factor for shear

  std::string describe() const;
};

constexpr double kMaxRotationDegrees = 30.0;
constexpr double kMaxShear = 0.2;

// Uniform over the four kinds; rotation in [-30, 30] degrees, shear in [-0.2, 0.2].
Transform sample_transform(Rng& rng);

// Geometric transform about the image centre. Output pixels are inverse-mapped
// and bilinearly sampled; coordinates outside the source replicate the edge.
Image apply_transform(const Image& image, const Transform& transform);

}  // namespace geocnn
