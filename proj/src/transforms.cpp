#include "geocnn/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace geocnn {
namespace {

float lerp(float a, float b, double t) {
  return static_cast<float>(a + t * (static_cast<double>(b) - a));
}

// Samples all channels at fractional (y, x), clamping to the image border.
void sample_bilinear(const Image& img, double y, double x, float* out) {
  const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const std::size_t y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float top = lerp(img.at(y0, x0, ch), img.at(y0, x1, ch), fx);
    const float bottom = lerp(img.at(y1, x0, ch), img.at(y1, x1, ch), fx);
    out[ch] = std::clamp(lerp(top, bottom, fy), 0.0f, 1.0f);
  }
}

}  // namespace

Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3) {
    throw ShapeError("resize expects H x W x C, got " + shape_to_string(image.shape()));
  }
  if (out_h == 0 || out_w == 0) throw ShapeError("resize target must be at least 1x1");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  Image out({out_h, out_w, c});
  for (std::size_t y = 0; y < out_h; ++y) {
    const double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (std::size_t x = 0; x < out_w; ++x) {
      const double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
      sample_bilinear(image, src_y, src_x, &out.at(y, x, 0));
    }
  }
  return out;
}

std::string Transform::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::rotate: std::snprintf(buf, sizeof buf, "rotate(%.4fdeg)", amount); break;
    case Kind::hflip: std::snprintf(buf, sizeof buf, "hflip"); break;
    case Kind::vflip: std::snprintf(buf, sizeof buf, "vflip"); break;
    case Kind::shear: std::snprintf(buf, sizeof buf, "shear(%.4f)", amount); break;
  }
  return buf;
}

Transform sample_transform(Rng& rng) {
  Transform t;
  switch (rng.below(4)) {
    case 0:
      t.kind = Transform::Kind::rotate;
      t.amount = rng.uniform(-kMaxRotationDegrees, kMaxRotationDegrees);
      break;
    case 1: t.kind = Transform::Kind::hflip; break;
    case 2: t.kind = Transform::Kind::vflip; break;
    default:
      t.kind = Transform::Kind::shear;
      t.amount = rng.uniform(-kMaxShear, kMaxShear);
      break;
  }
  return t;
}

Image apply_transform(const Image& image, const Transform& transform) {
  if (image.rank() != 3) {
    throw ShapeError("transform expects H x W x C, got " + shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double theta = transform.amount * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);

  Image out({h, w, c});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      double sy = static_cast<double>(y), sx = static_cast<double>(x);
      switch (transform.kind) {
        case Transform::Kind::rotate:  // inverse rotation
          sx = cx + cos_t * dx + sin_t * dy;
          sy = cy - sin_t * dx + cos_t * dy;
          break;
        case Transform::Kind::hflip: sx = static_cast<double>(w - 1 - x); break;
        case Transform::Kind::vflip: sy = static_cast<double>(h - 1 - y); break;
        case Transform::Kind::shear: sx = static_cast<double>(x) - transform.amount * dy; break;
      }
      sample_bilinear(image, sy, sx, &out.at(y, x, 0));
    }
  }
  return out;
}

}  // namespace geocnn
