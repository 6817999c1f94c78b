#pragma once

// Plug-in denoising engines. Each engine D(.; sigma) evaluates the proximal
// mapping of sigma^2 * s(.) for its prior s: in closed form for the Tikhonov
// quadratic and the wavelet l1 priors, and to inner-iteration tolerance for
// isotropic TV via the dual projection fixed point.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "red/fft.hpp"
#include "red/image.hpp"
#include "red/wavelet.hpp"

namespace red {

enum class TikhonovOperator { Identity, DiscreteGradient };

struct DenoiserSpec {
  enum class Kind { Tikhonov, WaveletSoft, Tv };

  Kind kind = Kind::Tv;
  TikhonovOperator r_kind = TikhonovOperator::DiscreteGradient;  // Tikhonov only
  int levels = 1;                                                // WaveletSoft only
  int inner_iters = 40;                                          // Tv only
  double dual_step = 0.25;                                       // Tv only

  static DenoiserSpec tikhonov(TikhonovOperator r) {
    DenoiserSpec s;
    s.kind = Kind::Tikhonov;
    s.r_kind = r;
    return s;
  }
  static DenoiserSpec wavelet(int levels) {
    DenoiserSpec s;
    s.kind = Kind::WaveletSoft;
    s.levels = levels;
    return s;
  }
  static DenoiserSpec tv(int inner_iters = 40, double dual_step = 0.25) {
    DenoiserSpec s;
    s.kind = Kind::Tv;
    s.inner_iters = inner_iters;
    s.dual_step = dual_step;
    return s;
  }
};

namespace detail {

inline void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("denoise: sigma must be > 0");
}

// Eigenvalues of R^T R for the circular forward-difference gradient:
// 4 sin^2(pi u / W) + 4 sin^2(pi v / H).
inline double laplacian_symbol(int u, int v, int width, int height) {
  const double su = std::sin(std::numbers::pi * u / width);
  const double sv = std::sin(std::numbers::pi * v / height);
  return 4.0 * (su * su + sv * sv);
}

}  // namespace detail

// Exact solve of (sigma^2 R^T R + I) z = x in the Fourier basis.
inline Image tikhonov_denoise(const Image& x, double sigma, TikhonovOperator r_kind) {
  detail::check_sigma(sigma);
  const double s2 = sigma * sigma;
  if (r_kind == TikhonovOperator::Identity) {
    return (1.0 / (1.0 + s2)) * x;
  }
  fft::cvec freq = fft::forward2(x.samples(), x.width(), x.height());
  for (int v = 0; v < x.height(); ++v)
    for (int u = 0; u < x.width(); ++u)
      freq[static_cast<std::size_t>(v) * x.width() + u] /=
          1.0 + s2 * detail::laplacian_symbol(u, v, x.width(), x.height());
  return Image(x.width(), x.height(), fft::inverse2_real(std::move(freq), x.width(), x.height()));
}

// Soft-thresholds the detail bands of the orthonormal Haar transform at
// t = sigma^2. The coarse scaling block passes through unchanged, preserving
// the DC component; the prior is the l1 norm of the detail coefficients.
inline Image wavelet_denoise(const Image& x, double sigma, int levels) {
  detail::check_sigma(sigma);
  WaveletCoeffs coeffs = haar_analysis(x, levels);
  WaveletCoeffs shrunk = soft_threshold(coeffs, sigma * sigma);
  for (int y = 0; y < coeffs.coarse_height(); ++y)
    for (int xx = 0; xx < coeffs.coarse_width(); ++xx)
      shrunk.values[static_cast<std::size_t>(y) * coeffs.width + xx] =
          coeffs.values[static_cast<std::size_t>(y) * coeffs.width + xx];
  return haar_synthesis(shrunk);
}

// Isotropic total variation with forward differences and circular
// boundaries: sum over pixels of the Euclidean norm of the discrete
// gradient.
inline double tv_value(const Image& x) {
  const int w = x.width(), h = x.height();
  double acc = 0.0;
  for (int y = 0; y < h; ++y) {
    const int yn = (y + 1) % h;
    for (int xx = 0; xx < w; ++xx) {
      const int xn = (xx + 1) % w;
      const double gx = x.at(xn, y) - x.at(xx, y);
      const double gy = x.at(xx, yn) - x.at(xx, y);
      acc += std::sqrt(gx * gx + gy * gy);
    }
  }
  return acc;
}

// Approximate prox of sigma^2 * TV via the dual projection fixed point:
//   p <- (p + tau * grad(div p - x / sigma^2)) / (1 + tau * |grad(...)|)
// with tau = dual_step, run for inner_iters steps; output x - sigma^2 div p.
// tau <= 1/4 keeps the iteration stable.
inline Image tv_denoise(const Image& x, double sigma, int inner_iters = 40,
                        double dual_step = 0.25) {
  detail::check_sigma(sigma);
  if (inner_iters < 1) throw std::invalid_argument("tv_denoise: inner_iters must be >= 1");
  if (!(dual_step > 0.0 && dual_step <= 0.25))
    throw std::invalid_argument("tv_denoise: dual_step must be in (0, 0.25]");

  const int w = x.width(), h = x.height();
  const std::size_t n = x.size();
  const double weight = sigma * sigma;
  const double tau = dual_step;

  std::vector<double> px(n, 0.0), py(n, 0.0), divp(n, 0.0), g(n, 0.0);

  auto divergence = [&](std::vector<double>& out) {
    for (int y = 0; y < h; ++y) {
      const int yp = (y + h - 1) % h;
      for (int xx = 0; xx < w; ++xx) {
        const int xp = (xx + w - 1) % w;
        out[static_cast<std::size_t>(y) * w + xx] =
            px[static_cast<std::size_t>(y) * w + xx] - px[static_cast<std::size_t>(y) * w + xp] +
            py[static_cast<std::size_t>(y) * w + xx] - py[static_cast<std::size_t>(yp) * w + xx];
      }
    }
  };

  for (int it = 0; it < inner_iters; ++it) {
    divergence(divp);
    for (std::size_t i = 0; i < n; ++i) g[i] = divp[i] - x.samples()[i] / weight;
    for (int y = 0; y < h; ++y) {
      const int yn = (y + 1) % h;
      for (int xx = 0; xx < w; ++xx) {
        const int xn = (xx + 1) % w;
        const std::size_t i = static_cast<std::size_t>(y) * w + xx;
        const double gx = g[static_cast<std::size_t>(y) * w + xn] - g[i];
        const double gy = g[static_cast<std::size_t>(yn) * w + xx] - g[i];
        const double denom = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
        px[i] = (px[i] + tau * gx) / denom;
        py[i] = (py[i] + tau * gy) / denom;
      }
    }
  }
  divergence(divp);
  Image out = x;
  for (std::size_t i = 0; i < n; ++i) out.samples()[i] -= weight * divp[i];
  return out;
}

inline Image denoise(const DenoiserSpec& spec, const Image& x, double sigma) {
  switch (spec.kind) {
    case DenoiserSpec::Kind::Tikhonov:
      return tikhonov_denoise(x, sigma, spec.r_kind);
    case DenoiserSpec::Kind::WaveletSoft:
      return wavelet_denoise(x, sigma, spec.levels);
    case DenoiserSpec::Kind::Tv:
      return tv_denoise(x, sigma, spec.inner_iters, spec.dual_step);
  }
  throw std::logic_error("denoise: unknown denoiser kind");
}

}  // namespace red
