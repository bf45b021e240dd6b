#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "geocnn/dataset.hpp"
#include "geocnn/rng.hpp"

namespace geocnn {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Style {
  double base;
  double amplitude;
  double tint[3];
  double noise;
};

Style sample_style(Rng& rng) {
  Style s;
  s.base = rng.uniform(0.35, 0.65);
  s.amplitude = rng.uniform(0.12, 0.25);
  for (double& t : s.tint) t = rng.uniform(0.85, 1.15);
  s.noise = rng.uniform(0.04, 0.09);
  return s;
}

// Pattern value in roughly [-1, 1] at pixel (y, x).
using Pattern = std::function<double(double y, double x)>;

Pattern desert_pattern(Rng& rng, double side) {
  const double phi = rng.uniform(0.0, kTwoPi);
  const double slope = rng.uniform(0.5, 1.0);
  const double wave_f = rng.uniform(0.5, 1.0) / side;  // under one cycle per image
  const double wave_phase = rng.uniform(0.0, kTwoPi);
  const double psi = rng.uniform(0.0, kTwoPi);
  const double half = side / 2.0;
  return [=](double y, double x) {
    const double u = ((x - half) * std::cos(phi) + (y - half) * std::sin(phi)) / half;
    const double w = x * std::cos(psi) + y * std::sin(psi);
    return 0.7 * slope * u + 0.3 * std::cos(kTwoPi * wave_f * w + wave_phase);
  };
}

Pattern farmland_pattern(Rng& rng, double side) {
  const double phi = rng.uniform(0.0, kTwoPi);
  const double period = rng.uniform(side / 8.0, side / 4.0);
  const double phase = rng.uniform(0.0, kTwoPi);
  return [=](double y, double x) {
    const double u = x * std::cos(phi) + y * std::sin(phi);
    return std::tanh(3.0 * std::sin(kTwoPi * u / period + phase));
  };
}

Pattern meadow_pattern(Rng& rng, double side) {
  constexpr int kWaves = 8;
  double kx[kWaves], ky[kWaves], ph[kWaves];
  for (int i = 0; i < kWaves; ++i) {
    const double dir = rng.uniform(0.0, kTwoPi);
    const double cycles = rng.uniform(side / 6.0, side / 3.0);
    kx[i] = kTwoPi * cycles / side * std::cos(dir);
    ky[i] = kTwoPi * cycles / side * std::sin(dir);
    ph[i] = rng.uniform(0.0, kTwoPi);
  }
  return [=](double y, double x) {
    double s = 0.0;
    for (int i = 0; i < kWaves; ++i) s += std::cos(kx[i] * x + ky[i] * y + ph[i]);
    return s / 2.0;  // sqrt(kWaves / 2)
  };
}

Pattern terrace_pattern(Rng& rng, double side) {
  const double cy = rng.uniform(0.25, 0.75) * side;
  const double cx = rng.uniform(0.25, 0.75) * side;
  const double band = rng.uniform(side / 12.0, side / 6.0);
  const double offset = rng.uniform(0.0, band);
  return [=](double y, double x) {
    const double r = std::hypot(y - cy, x - cx) + offset;
    return (static_cast<long>(std::floor(r / band)) % 2 == 0) ? 1.0 : -1.0;
  };
}

Image render(const Pattern& pattern, const Style& style, std::size_t side, Rng& rng) {
  Image img({side, side, 3});
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double v =
          style.base + style.amplitude * pattern(static_cast<double>(y), static_cast<double>(x));
      for (std::size_t c = 0; c < 3; ++c) {
        const double px = style.tint[c] * v + style.noise * rng.normal();
        img.at(y, x, c) = static_cast<float>(std::clamp(px, 0.0, 1.0));
      }
    }
  }
  return img;
}

}  // namespace

Dataset synth_dataset(std::size_t n_per_class, std::size_t side, std::uint64_t seed) {
  if (n_per_class == 0) throw DataError("synthetic dataset needs n_per_class >= 1");
  if (side < 8) throw DataError("synthetic dataset needs side >= 8");
  Dataset ds;
  ds.encoder = LabelEncoder({"desert", "farmland", "meadow", "terrace"});
  ds.items.resize(4 * n_per_class);
  const double s = static_cast<double>(side);
  const std::int64_t total = static_cast<std::int64_t>(ds.items.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t n = 0; n < total; ++n) {
    const std::size_t label = static_cast<std::size_t>(n) / n_per_class;
    const std::size_t index = static_cast<std::size_t>(n) % n_per_class;
    Rng rng = Rng::derive(seed, {label, index});
    const Style style = sample_style(rng);
    Pattern pattern;
    switch (label) {
      case 0: pattern = desert_pattern(rng, s); break;
      case 1: pattern = farmland_pattern(rng, s); break;
      case 2: pattern = meadow_pattern(rng, s); break;
      default: pattern = terrace_pattern(rng, s); break;
    }
    LabeledImage& item = ds.items[static_cast<std::size_t>(n)];
    item.pixels = render(pattern, style, side, rng);
    item.label = label;
    item.origin.source = static_cast<std::size_t>(n);
  }
  return ds;
}

}  // namespace geocnn
