#pragma once

// Test-only image generator: smooth gradients, a few sharp edges and
// oriented sinusoids, quantized to integers on 0..255 like 8-bit sources.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "nrsr/image.hpp"

namespace nrsr::test {

inline Image synthetic_image(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base = 60.0 + 120.0 * u(rng);
  const double gx = (u(rng) - 0.5) * 1.2;
  const double gy = (u(rng) - 0.5) * 1.2;
  struct Wave {
    double fx, fy, phase, amp;
  };
  Wave waves[2];
  for (auto& w : waves) {
    const double freq = 0.04 + 0.25 * u(rng);
    const double angle = 3.14159265358979 * u(rng);
    w = {freq * std::cos(angle), freq * std::sin(angle), 6.2831853 * u(rng), 15.0 + 30.0 * u(rng)};
  }
  struct Edge {
    double nx, ny, offset, step;
  };
  Edge edges[2];
  for (auto& e : edges) {
    const double angle = 6.2831853 * u(rng);
    e = {std::cos(angle), std::sin(angle), (u(rng) - 0.5) * 0.6 * (height + width) / 2.0, (u(rng) - 0.5) * 80.0};
  }
  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double cy = y - height / 2.0;
      const double cx = x - width / 2.0;
      double v = base + gx * cx + gy * cy;
      for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
      for (const auto& e : edges) {
        if (e.nx * cx + e.ny * cy > e.offset) v += e.step;
      }
      img.at(y, x) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return img;
}

inline Image random_integer_image(int height, int width, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  Image img(height, width);
  for (auto& v : img.pixels) v = static_cast<float>(d(rng));
  return img;
}

}  // namespace nrsr::test
