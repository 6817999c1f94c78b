#pragma once

// 2D grayscale raster with real-valued samples, row-major. Intensities are
// nominally in [0, 255] but are never clamped here: iterates of a gradient
// scheme must be free to leave the range, clamping happens only when a file
// is written.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace red {

class Image {
 public:
  Image() = default;

  Image(int width, int height, double fill = 0.0)
      : width_(width),
        height_(height),
        samples_(checked_size(width, height), fill) {}

  Image(int width, int height, std::vector<double> samples)
      : width_(width), height_(height), samples_(std::move(samples)) {
    if (samples_.size() != checked_size(width, height))
      throw std::invalid_argument("Image: sample count does not match dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return samples_.size(); }

  double& at(int x, int y) { return samples_[index(x, y)]; }
  double at(int x, int y) const { return samples_[index(x, y)]; }

  std::vector<double>& samples() { return samples_; }
  const std::vector<double>& samples() const { return samples_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Image: dimensions must be positive");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> samples_;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// PSNR of two identical images is capped at a finite sentinel so that
// per-iteration traces stay plottable.
inline constexpr double kPsnrCap = 200.0;

inline double mse(const Image& ref, const Image& test) {
  require_same_shape(ref, test, "mse");
  double acc = 0.0;
  const auto& a = ref.samples();
  const auto& b = test.samples();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

inline double psnr(const Image& ref, const Image& test, double peak = 255.0) {
  const double err = mse(ref, test);
  if (err == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / err);
}

inline double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.samples()[i] * b.samples()[i];
  return acc;
}

inline double norm(const Image& a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(const Image& a) {
  for (double v : a.samples())
    if (!std::isfinite(v)) return false;
  return true;
}

inline Image crop(const Image& a, int border) {
  if (border < 0) throw std::invalid_argument("crop: negative border");
  if (border == 0) return a;
  const int w = a.width() - 2 * border;
  const int h = a.height() - 2 * border;
  if (w <= 0 || h <= 0) throw std::invalid_argument("crop: border swallows the image");
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = a.at(x + border, y + border);
  return out;
}

inline Image operator+(const Image& a, const Image& b) {
  require_same_shape(a, b, "operator+");
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples()[i] += b.samples()[i];
  return out;
}

inline Image operator-(const Image& a, const Image& b) {
  require_same_shape(a, b, "operator-");
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples()[i] -= b.samples()[i];
  return out;
}

inline Image operator*(double s, const Image& a) {
  Image out = a;
  for (double& v : out.samples()) v *= s;
  return out;
}

}  // namespace red
