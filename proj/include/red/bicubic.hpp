#pragma once

// Separable bicubic interpolation with the two-parameter cubic convolution
// kernel at a = -0.5. Sample positions are centre-aligned and edge samples
// are replicated; constants map to constants and linear ramps are reproduced
// away from the borders.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "red/image.hpp"

namespace red {

namespace detail {

inline double cubic_weight(double t) {
  constexpr double a = -0.5;
  const double at = std::abs(t);
  if (at <= 1.0) return ((a + 2.0) * at - (a + 3.0)) * at * at + 1.0;
  if (at < 2.0) return (((at - 5.0) * at + 8.0) * at - 4.0) * a;
  return 0.0;
}

// Upsamples one axis by `scale`; `n` source samples at stride `src_stride`.
inline void cubic_upsample_line(const double* src, int n, int src_stride, double* dst, int scale,
                                int dst_stride) {
  for (int o = 0; o < n * scale; ++o) {
    const double pos = (o + 0.5) / scale - 0.5;  // centre-aligned source coordinate
    const int base = static_cast<int>(std::floor(pos));
    const double frac = pos - base;
    double acc = 0.0;
    for (int k = -1; k <= 2; ++k) {
      int idx = base + k;
      idx = idx < 0 ? 0 : (idx >= n ? n - 1 : idx);  // replicate edges
      acc += cubic_weight(frac - k) * src[idx * src_stride];
    }
    dst[o * dst_stride] = acc;
  }
}

}  // namespace detail

inline Image bicubic_upsample(const Image& y, int scale) {
  if (scale < 2) throw std::invalid_argument("bicubic_upsample: scale must be >= 2");
  const int w = y.width(), h = y.height();
  const int ow = w * scale, oh = h * scale;

  // rows first, then columns
  std::vector<double> wide(static_cast<std::size_t>(ow) * h);
  for (int row = 0; row < h; ++row)
    detail::cubic_upsample_line(y.samples().data() + static_cast<std::size_t>(row) * w, w, 1,
                                wide.data() + static_cast<std::size_t>(row) * ow, scale, 1);
  Image out(ow, oh);
  for (int col = 0; col < ow; ++col)
    detail::cubic_upsample_line(wide.data() + col, h, ow, out.samples().data() + col, scale, ow);
  return out;
}

}  // namespace red
