#pragma once

// Deterministic synthetic test images: a smooth ramp with mild sinusoidal
// texture, overlaid with random constant rectangles. Gives piecewise-smooth
// content with edges, enough structure for restoration experiments without
// shipping copyrighted photographs. Samples are integer-valued in [0, 255]
// so the images survive PGM round trips unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "red/image.hpp"
#include "red/rng.hpp"

namespace red {

inline Image make_synthetic_image(int width, int height, std::uint64_t seed) {
  Image img(width, height);
  SplitMix64 rng(seed);

  const double phase_x = rng.next_in(0.0, 2.0 * std::numbers::pi);
  const double phase_y = rng.next_in(0.0, 2.0 * std::numbers::pi);
  const double freq_x = rng.next_in(2.0, 5.0);
  const double freq_y = rng.next_in(2.0, 5.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
      const double v = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
      double value = 60.0 + 110.0 * u + 30.0 * v;
      value += 12.0 * std::sin(2.0 * std::numbers::pi * freq_x * u + phase_x) *
               std::cos(2.0 * std::numbers::pi * freq_y * v + phase_y);
      img.at(x, y) = value;
    }

  const int rects = 6;
  for (int r = 0; r < rects; ++r) {
    const int rw = 1 + static_cast<int>(rng.next_in(0.15, 0.45) * width);
    const int rh = 1 + static_cast<int>(rng.next_in(0.15, 0.45) * height);
    const int x0 = static_cast<int>(rng.next_in(0.0, std::max(1, width - rw)));
    const int y0 = static_cast<int>(rng.next_in(0.0, std::max(1, height - rh)));
    const double level = rng.next_in(20.0, 235.0);
    for (int y = y0; y < std::min(height, y0 + rh); ++y)
      for (int x = x0; x < std::min(width, x0 + rw); ++x) img.at(x, y) = level;
  }

  for (double& s : img.samples()) s = std::clamp(std::round(s), 0.0, 255.0);
  return img;
}

}  // namespace red
