#pragma once

// Discrete Fourier transforms used to diagonalise circular convolution.
// Lengths factorisable into 2s and 3s go through a recursive Cooley-Tukey
// split; any remaining factor falls back to the Bluestein chirp-z transform,
// so arbitrary image sizes are supported. All working buffers are per call,
// transforms are safe to run concurrently.

#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace red::fft {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

namespace detail {

// roots[t] = exp(-2*pi*i*t/n)
inline cvec root_table(std::size_t n) {
  cvec roots(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    roots[t] = cplx(std::cos(ang), std::sin(ang));
  }
  return roots;
}

inline void transform(const cplx* in, std::size_t in_stride, cplx* out, std::size_t n,
                      const cplx* roots, std::size_t root_stride);

// Bluestein chirp-z: an arbitrary-length DFT expressed as a power-of-two
// circular convolution. k^2 is reduced mod 2n before the angle is formed so
// the trig argument stays small.
inline void bluestein(const cplx* in, std::size_t in_stride, cplx* out, std::size_t n) {
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  cvec chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
    const double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  cvec a(m, cplx(0.0)), b(m, cplx(0.0));
  for (std::size_t k = 0; k < n; ++k) a[k] = in[k * in_stride] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

  const cvec roots_m = root_table(m);
  cvec fa(m), fb(m);
  transform(a.data(), 1, fa.data(), m, roots_m.data(), 1);
  transform(b.data(), 1, fb.data(), m, roots_m.data(), 1);
  for (std::size_t k = 0; k < m; ++k) fa[k] = std::conj(fa[k] * fb[k]);
  transform(fa.data(), 1, a.data(), m, roots_m.data(), 1);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = std::conj(a[k]) * inv_m * chirp[k];
}

// Out-of-place forward DFT of length n. `roots` is the table for the
// top-level length; recursion levels address it with a widened stride.
inline void transform(const cplx* in, std::size_t in_stride, cplx* out, std::size_t n,
                      const cplx* roots, std::size_t root_stride) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  std::size_t radix;
  if (n % 2 == 0)
    radix = 2;
  else if (n % 3 == 0)
    radix = 3;
  else {
    bluestein(in, in_stride, out, n);
    return;
  }
  const std::size_t m = n / radix;
  for (std::size_t j = 0; j < radix; ++j)
    transform(in + j * in_stride, in_stride * radix, out + j * m, m, roots, root_stride * radix);
  if (radix == 2) {
    for (std::size_t q = 0; q < m; ++q) {
      const cplx t0 = out[q];
      const cplx t1 = out[m + q] * roots[q * root_stride];
      out[q] = t0 + t1;
      out[m + q] = t0 - t1;
    }
  } else {
    constexpr double kSin120 = 0.86602540378443864676;  // sin(2*pi/3)
    const cplx w3(-0.5, -kSin120);                      // exp(-2*pi*i/3)
    const cplx w3c(-0.5, kSin120);
    for (std::size_t q = 0; q < m; ++q) {
      const cplx w = roots[q * root_stride];
      const cplx t0 = out[q];
      const cplx t1 = out[m + q] * w;
      const cplx t2 = out[2 * m + q] * (w * w);
      out[q] = t0 + t1 + t2;
      out[m + q] = t0 + w3 * t1 + w3c * t2;
      out[2 * m + q] = t0 + w3c * t1 + w3 * t2;
    }
  }
}

}  // namespace detail

// In-place 1D DFT. Forward is unscaled; inverse applies the 1/n factor.
inline void fft(cvec& data, bool inverse = false) {
  const std::size_t n = data.size();
  if (n == 0) return;
  if (inverse)
    for (auto& v : data) v = std::conj(v);
  const cvec roots = detail::root_table(n);
  cvec out(n);
  detail::transform(data.data(), 1, out.data(), n, roots.data(), 1);
  data.swap(out);
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : data) v = std::conj(v) * inv_n;
  }
}

// In-place 2D DFT on a row-major width x height buffer.
inline void fft2(cvec& data, int width, int height, bool inverse = false) {
  const std::size_t w = static_cast<std::size_t>(width);
  const std::size_t h = static_cast<std::size_t>(height);
  if (inverse)
    for (auto& v : data) v = std::conj(v);
  const cvec roots_w = detail::root_table(w);
  const cvec roots_h = detail::root_table(h);
  cvec line(std::max(w, h));
  for (std::size_t y = 0; y < h; ++y) {
    detail::transform(data.data() + y * w, 1, line.data(), w, roots_w.data(), 1);
    std::copy(line.begin(), line.begin() + w, data.begin() + y * w);
  }
  for (std::size_t x = 0; x < w; ++x) {
    detail::transform(data.data() + x, w, line.data(), h, roots_h.data(), 1);
    for (std::size_t y = 0; y < h; ++y) data[y * w + x] = line[y];
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(w * h);
    for (auto& v : data) v = std::conj(v) * inv;
  }
}

inline cvec forward2(const std::vector<double>& real, int width, int height) {
  cvec data(real.size());
  for (std::size_t i = 0; i < real.size(); ++i) data[i] = cplx(real[i], 0.0);
  fft2(data, width, height);
  return data;
}

inline std::vector<double> inverse2_real(cvec freq, int width, int height) {
  fft2(freq, width, height, /*inverse=*/true);
  std::vector<double> out(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i) out[i] = freq[i].real();
  return out;
}

}  // namespace red::fft
