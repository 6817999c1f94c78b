#pragma once

// The degradation operator of the observation model y = A x + e, realised
// operationally rather than as a matrix: circular blur, or circular blur
// followed by integer subsampling, with adjoint, pseudoinverse and spectral
// norm actions. Circular boundaries keep the blur exactly diagonal in the
// Fourier basis, which makes the FFT pseudoinverse exact.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "red/cg.hpp"
#include "red/fft.hpp"
#include "red/image.hpp"
#include "red/rng.hpp"

namespace red {

struct BlurKernel {
  int size = 1;               // odd side length
  std::vector<double> taps;   // size*size, row-major

  double tap(int dx, int dy) const {
    const int r = size / 2;
    return taps[static_cast<std::size_t>(dy + r) * size + (dx + r)];
  }
};

// Samples exp(-(i^2+j^2)/(2 std^2)) on the centred grid and normalises the
// taps to unit sum.
inline BlurKernel make_gaussian_kernel(int size, double std_dev) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("make_gaussian_kernel: size must be odd and positive");
  if (!(std_dev > 0.0)) throw std::invalid_argument("make_gaussian_kernel: std must be > 0");
  BlurKernel k;
  k.size = size;
  k.taps.resize(static_cast<std::size_t>(size) * size);
  const int r = size / 2;
  double sum = 0.0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) {
      const double v = std::exp(-(static_cast<double>(i) * i + static_cast<double>(j) * j) /
                                (2.0 * std_dev * std_dev));
      k.taps[static_cast<std::size_t>(j + r) * size + (i + r)] = v;
      sum += v;
    }
  for (double& t : k.taps) t /= sum;
  return k;
}

inline BlurKernel make_uniform_kernel(int size) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("make_uniform_kernel: size must be odd and positive");
  BlurKernel k;
  k.size = size;
  k.taps.assign(static_cast<std::size_t>(size) * size,
                1.0 / (static_cast<double>(size) * size));
  return k;
}

struct PseudoinverseConfig {
  double eps = 0.0;      // spectral denominator regulariser, |K|^2 + eps
  double cg_tol = 1e-6;
  int cg_max_iters = 100;
};

enum class OperatorKind { Blur, BlurDownsample };

class DegradationOperator {
 public:
  static DegradationOperator blur(const BlurKernel& kernel, int width, int height) {
    return DegradationOperator(OperatorKind::Blur, kernel, width, height, 1);
  }

  static DegradationOperator blur_downsample(const BlurKernel& kernel, int width, int height,
                                             int scale) {
    if (scale < 2) throw std::invalid_argument("blur_downsample: scale must be >= 2");
    if (width % scale != 0 || height % scale != 0)
      throw std::invalid_argument("blur_downsample: dimensions must be divisible by scale");
    return DegradationOperator(OperatorKind::BlurDownsample, kernel, width, height, scale);
  }

  OperatorKind kind() const { return kind_; }
  int input_width() const { return width_; }
  int input_height() const { return height_; }
  int output_width() const { return width_ / scale_; }
  int output_height() const { return height_ / scale_; }
  int scale() const { return scale_; }

  // y = A x: circular convolution with the kernel, then (for the
  // downsampling kind) samples at indices that are 0 mod scale.
  Image apply(const Image& x) const {
    require_input(x, "DegradationOperator::apply");
    std::vector<double> blurred = convolve(x.samples(), kernel_freq_);
    if (kind_ == OperatorKind::Blur) return Image(width_, height_, std::move(blurred));
    return subsample(blurred);
  }

  // A^T r: zero-fill upsample (downsampling kind), then circular correlation,
  // i.e. multiplication by the conjugate kernel spectrum.
  Image apply_adjoint(const Image& r) const {
    require_output(r, "DegradationOperator::apply_adjoint");
    std::vector<double> up =
        kind_ == OperatorKind::Blur ? r.samples() : zero_fill(r.samples());
    return Image(width_, height_, correlate(up));
  }

  // A^+ r = A^T (A A^T)^-1 r. For pure blur A A^T is diagonal in frequency,
  // so the action is conj(K) / (|K|^2 + eps). For blur+subsample the low
  // resolution system (A A^T + eps I) z = r is solved by conjugate gradients
  // and the adjoint is applied to z.
  Image apply_pseudoinverse(const Image& r, const PseudoinverseConfig& cfg = {}) const {
    require_output(r, "DegradationOperator::apply_pseudoinverse");
    if (!(cfg.eps >= 0.0)) throw std::invalid_argument("apply_pseudoinverse: eps must be >= 0");
    if (kind_ == OperatorKind::Blur) {
      fft::cvec freq = fft::forward2(r.samples(), width_, height_);
      for (std::size_t i = 0; i < freq.size(); ++i) {
        const double denom = std::norm(kernel_freq_[i]) + cfg.eps;
        freq[i] = denom == 0.0 ? fft::cplx(0.0) : freq[i] * std::conj(kernel_freq_[i]) / denom;
      }
      return Image(width_, height_, fft::inverse2_real(std::move(freq), width_, height_));
    }
    auto matvec = [this, &cfg](const std::vector<double>& z) {
      std::vector<double> out = gram_lowres(z);
      if (cfg.eps > 0.0)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cfg.eps * z[i];
      return out;
    };
    CgResult sol = conjugate_gradient(matvec, r.samples(), cfg.cg_tol, cfg.cg_max_iters);
    return apply_adjoint(Image(output_width(), output_height(), std::move(sol.x)));
  }

 private:
  DegradationOperator(OperatorKind kind, const BlurKernel& kernel, int width, int height,
                      int scale)
      : kind_(kind), width_(width), height_(height), scale_(scale) {
    if (width < 1 || height < 1)
      throw std::invalid_argument("DegradationOperator: dimensions must be positive");
    if (kernel.size < 1 || kernel.size % 2 == 0 ||
        kernel.taps.size() != static_cast<std::size_t>(kernel.size) * kernel.size)
      throw std::invalid_argument("DegradationOperator: malformed kernel");
    // Embed the kernel on the image grid with the centre tap at the origin;
    // offsets wrap circularly so kernels larger than the grid still work.
    std::vector<double> embedded(static_cast<std::size_t>(width) * height, 0.0);
    const int r = kernel.size / 2;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int px = ((dx % width) + width) % width;
        const int py = ((dy % height) + height) % height;
        embedded[static_cast<std::size_t>(py) * width + px] += kernel.tap(dx, dy);
      }
    kernel_freq_ = fft::forward2(embedded, width, height);
  }

  void require_input(const Image& x, const char* what) const {
    if (x.width() != width_ || x.height() != height_)
      throw std::invalid_argument(std::string(what) + ": geometry mismatch");
  }

  void require_output(const Image& r, const char* what) const {
    if (r.width() != output_width() || r.height() != output_height())
      throw std::invalid_argument(std::string(what) + ": geometry mismatch");
  }

  std::vector<double> convolve(const std::vector<double>& x, const fft::cvec& spectrum) const {
    fft::cvec freq = fft::forward2(x, width_, height_);
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i] *= spectrum[i];
    return fft::inverse2_real(std::move(freq), width_, height_);
  }

  std::vector<double> correlate(const std::vector<double>& x) const {
    fft::cvec freq = fft::forward2(x, width_, height_);
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i] *= std::conj(kernel_freq_[i]);
    return fft::inverse2_real(std::move(freq), width_, height_);
  }

  Image subsample(const std::vector<double>& full) const {
    const int ow = output_width(), oh = output_height();
    Image out(ow, oh);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out.at(x, y) = full[static_cast<std::size_t>(y) * scale_ * width_ + x * scale_];
    return out;
  }

  std::vector<double> zero_fill(const std::vector<double>& low) const {
    const int ow = output_width(), oh = output_height();
    std::vector<double> full(static_cast<std::size_t>(width_) * height_, 0.0);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        full[static_cast<std::size_t>(y) * scale_ * width_ + x * scale_] =
            low[static_cast<std::size_t>(y) * ow + x];
    return full;
  }

  // (A A^T) z on the low resolution grid: zero-fill, multiply by |K|^2 in
  // frequency, subsample. Two transforms per call.
  std::vector<double> gram_lowres(const std::vector<double>& z) const {
    fft::cvec freq = fft::forward2(zero_fill(z), width_, height_);
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i] *= std::norm(kernel_freq_[i]);
    std::vector<double> full = fft::inverse2_real(std::move(freq), width_, height_);
    return subsample(full).samples();
  }

  OperatorKind kind_;
  int width_;
  int height_;
  int scale_;
  fft::cvec kernel_freq_;
};

struct PowerMethodResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Power-method estimate of ||A^T A|| from a fixed seeded start vector,
// iterating x <- A^T A x / ||A^T A x|| until the relative change of the
// eigenvalue estimate drops below tol.
inline PowerMethodResult operator_norm_sq(const DegradationOperator& op, int iters = 1000,
                                          double tol = 1e-9) {
  if (iters < 1) throw std::invalid_argument("operator_norm_sq: iters must be >= 1");
  Image v(op.input_width(), op.input_height());
  SplitMix64 rng(0x5eed0f0e57a57a57ULL);
  for (double& s : v.samples()) s = rng.next_gaussian();
  const double v_norm = norm(v);
  for (double& s : v.samples()) s /= v_norm;

  PowerMethodResult result;
  double previous = 0.0;
  for (int it = 1; it <= iters; ++it) {
    Image w = op.apply_adjoint(op.apply(v));
    const double estimate = norm(w);
    result.iterations = it;
    if (estimate == 0.0) {  // zero operator
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    result.value = estimate;
    for (std::size_t i = 0; i < w.size(); ++i) v.samples()[i] = w.samples()[i] / estimate;
    if (it > 1 && std::abs(estimate - previous) <= tol * estimate) {
      result.converged = true;
      return result;
    }
    previous = estimate;
  }
  return result;
}

}  // namespace red
