#pragma once

// Orthonormal multilevel 2D Haar transform in the standard Mallat layout:
// after L levels the coarse scaling block sits in the top-left
// (width/2^L) x (height/2^L) corner and everything else is detail.
// Analysis followed by synthesis is the identity up to roundoff and the
// transform preserves the l2 norm exactly.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "red/image.hpp"

namespace red {

struct WaveletCoeffs {
  int width = 0;
  int height = 0;
  int levels = 0;
  std::vector<double> values;  // row-major, same extent as the image

  int coarse_width() const { return width >> levels; }
  int coarse_height() const { return height >> levels; }
  bool is_coarse(int x, int y) const { return x < coarse_width() && y < coarse_height(); }
};

namespace detail {

inline void check_haar_geometry(int width, int height, int levels) {
  if (levels < 1) throw std::invalid_argument("haar: levels must be >= 1");
  const int block = 1 << levels;
  if (width % block != 0 || height % block != 0)
    throw std::invalid_argument("haar: dimensions must be divisible by 2^levels");
}

// One orthonormal Haar split of v[0..n): averages to the front, details to
// the back. `stride` lets the same code walk rows and columns.
inline void haar_split(double* v, int n, int stride, std::vector<double>& scratch) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    const double a = v[2 * i * stride];
    const double b = v[(2 * i + 1) * stride];
    scratch[i] = (a + b) * inv_sqrt2;
    scratch[half + i] = (a - b) * inv_sqrt2;
  }
  for (int i = 0; i < n; ++i) v[i * stride] = scratch[i];
}

inline void haar_merge(double* v, int n, int stride, std::vector<double>& scratch) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    const double s = v[i * stride];
    const double d = v[(half + i) * stride];
    scratch[2 * i] = (s + d) * inv_sqrt2;
    scratch[2 * i + 1] = (s - d) * inv_sqrt2;
  }
  for (int i = 0; i < n; ++i) v[i * stride] = scratch[i];
}

}  // namespace detail

inline WaveletCoeffs haar_analysis(const Image& x, int levels) {
  detail::check_haar_geometry(x.width(), x.height(), levels);
  WaveletCoeffs c{x.width(), x.height(), levels, x.samples()};
  std::vector<double> scratch(static_cast<std::size_t>(std::max(x.width(), x.height())));
  int aw = x.width(), ah = x.height();
  for (int level = 0; level < levels; ++level) {
    for (int y = 0; y < ah; ++y)
      detail::haar_split(c.values.data() + static_cast<std::size_t>(y) * x.width(), aw, 1, scratch);
    for (int xx = 0; xx < aw; ++xx)
      detail::haar_split(c.values.data() + xx, ah, x.width(), scratch);
    aw /= 2;
    ah /= 2;
  }
  return c;
}

inline Image haar_synthesis(const WaveletCoeffs& c) {
  detail::check_haar_geometry(c.width, c.height, c.levels);
  if (c.values.size() != static_cast<std::size_t>(c.width) * c.height)
    throw std::invalid_argument("haar_synthesis: malformed coefficient buffer");
  std::vector<double> values = c.values;
  std::vector<double> scratch(static_cast<std::size_t>(std::max(c.width, c.height)));
  for (int level = c.levels - 1; level >= 0; --level) {
    const int aw = c.width >> level;
    const int ah = c.height >> level;
    for (int xx = 0; xx < aw; ++xx)
      detail::haar_merge(values.data() + xx, ah, c.width, scratch);
    for (int y = 0; y < ah; ++y)
      detail::haar_merge(values.data() + static_cast<std::size_t>(y) * c.width, aw, 1, scratch);
  }
  return Image(c.width, c.height, std::move(values));
}

// Elementwise shrinkage sign(a) * max(|a| - t, 0) over every coefficient.
inline WaveletCoeffs soft_threshold(const WaveletCoeffs& c, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
  WaveletCoeffs out = c;
  for (double& v : out.values) {
    const double mag = std::abs(v) - t;
    v = mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

}  // namespace red
