#pragma once

// Numeric verification of the subgradient reading of the denoiser residual:
// for a convex prior s, x - D(x; sigma) lands in sigma^2 * ds(D(x; sigma)).
// For the smooth Tikhonov prior the two evaluation routes must coincide; for
// the wavelet l1 prior every thresholded coefficient must land in its
// admissible interval. A generic finite-difference gradient oracle is
// included for checking analytic gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "red/denoisers.hpp"
#include "red/image.hpp"
#include "red/rng.hpp"
#include "red/solver.hpp"
#include "red/wavelet.hpp"

namespace red {

namespace detail {

// R^T R for the circular forward-difference gradient, applied spatially:
// 4v - (left + right + up + down). Deliberately not the FFT route, so the
// identity check below exercises two independent evaluation paths.
inline Image gradient_gram_spatial(const Image& v) {
  const int w = v.width(), h = v.height();
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int yp = (y + h - 1) % h, yn = (y + 1) % h;
    for (int x = 0; x < w; ++x) {
      const int xp = (x + w - 1) % w, xn = (x + 1) % w;
      out.at(x, y) = 4.0 * v.at(x, y) - v.at(xp, y) - v.at(xn, y) - v.at(x, yp) - v.at(x, yn);
    }
  }
  return out;
}

}  // namespace detail

// Compares x - D(x; sigma) against sigma^2 * R^T R * D(x; sigma), which are
// algebraically equal for the Tikhonov prior. Returns the max deviation
// relative to the larger of the two gradients; 0 when both vanish.
inline double check_tikhonov_identity(TikhonovOperator r_kind, double sigma, const Image& x) {
  const Image denoised = tikhonov_denoise(x, sigma, r_kind);
  const Image direct = x - denoised;
  const double s2 = sigma * sigma;
  const Image via_prior = r_kind == TikhonovOperator::Identity
                              ? s2 * denoised
                              : s2 * detail::gradient_gram_spatial(denoised);
  double max_diff = 0.0, max_mag = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(direct.samples()[i] - via_prior.samples()[i]));
    max_mag = std::max({max_mag, std::abs(direct.samples()[i]), std::abs(via_prior.samples()[i])});
  }
  return max_mag == 0.0 ? 0.0 : max_diff / max_mag;
}

struct MembershipEntry {
  enum class Case { Positive, Negative, Interior };
  Case label = Case::Interior;
  double z = 0.0;          // observed coefficient of (1/sigma^2) W^T (x - D(x))
  double violation = 0.0;  // distance outside the admissible set
};

struct MembershipReport {
  std::vector<MembershipEntry> entries;  // thresholded (detail) coefficients only
  double max_violation = 0.0;
  int positive_count = 0;
  int negative_count = 0;
  int interior_count = 0;
};

// Classifies each detail coefficient of (1/sigma^2) W^T (x - D(x; sigma))
// against the soft-threshold case structure: exactly +1 where the shrunk
// coefficient is positive, exactly -1 where negative, inside [-1, 1] where it
// was shrunk to zero. The coarse scaling band is exempt from thresholding and
// is therefore not classified.
inline MembershipReport check_l1_membership(const Image& x, double sigma, int levels) {
  const double s2 = sigma * sigma;
  const Image residual = x - wavelet_denoise(x, sigma, levels);
  const WaveletCoeffs z = haar_analysis(residual, levels);
  const WaveletCoeffs alpha = haar_analysis(x, levels);
  const WaveletCoeffs shrunk = soft_threshold(alpha, s2);

  MembershipReport report;
  report.entries.reserve(z.values.size());
  for (int y = 0; y < z.height; ++y)
    for (int xx = 0; xx < z.width; ++xx) {
      if (z.is_coarse(xx, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * z.width + xx;
      MembershipEntry entry;
      entry.z = z.values[i] / s2;
      const double t = shrunk.values[i];
      if (t > 0.0) {
        entry.label = MembershipEntry::Case::Positive;
        entry.violation = std::abs(entry.z - 1.0);
        ++report.positive_count;
      } else if (t < 0.0) {
        entry.label = MembershipEntry::Case::Negative;
        entry.violation = std::abs(entry.z + 1.0);
        ++report.negative_count;
      } else {
        entry.label = MembershipEntry::Case::Interior;
        entry.violation = std::max(0.0, std::abs(entry.z) - 1.0);
        ++report.interior_count;
      }
      report.max_violation = std::max(report.max_violation, entry.violation);
      report.entries.push_back(entry);
    }
  return report;
}

// Central finite differences of a scalar field over images, coordinate by
// coordinate: (f(x + h e_i) - f(x - h e_i)) / (2h).
template <typename F>
Image finite_difference_gradient(F&& f, const Image& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  Image grad(x.width(), x.height());
  Image probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe.samples()[i];
    probe.samples()[i] = original + h;
    const double fp = f(probe);
    probe.samples()[i] = original - h;
    const double fm = f(probe);
    probe.samples()[i] = original;
    grad.samples()[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

struct SweepResult {
  int draws = 0;
  double worst = 0.0;
};

namespace detail {

inline Image random_image(int width, int height, SplitMix64& rng, double lo = 0.0,
                          double hi = 255.0) {
  Image img(width, height);
  for (double& s : img.samples()) s = rng.next_in(lo, hi);
  return img;
}

}  // namespace detail

// Worst deviation of the two Tikhonov gradient routes over seeded random
// (x, sigma) draws.
inline SweepResult tikhonov_identity_sweep(TikhonovOperator r_kind, int draws, int size,
                                           std::uint64_t seed) {
  SplitMix64 rng(seed);
  SweepResult result{draws, 0.0};
  for (int d = 0; d < draws; ++d) {
    const Image x = detail::random_image(size, size, rng);
    const double sigma = rng.next_in(0.5, 20.0);
    result.worst = std::max(result.worst, check_tikhonov_identity(r_kind, sigma, x));
  }
  return result;
}

// Worst subgradient-membership violation over seeded random (x, sigma) draws.
inline SweepResult l1_membership_sweep(int levels, int draws, int size, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SweepResult result{draws, 0.0};
  for (int d = 0; d < draws; ++d) {
    const Image x = detail::random_image(size, size, rng);
    const double sigma = rng.next_in(0.5, 20.0);
    result.worst = std::max(result.worst, check_l1_membership(x, sigma, levels).max_violation);
  }
  return result;
}

// Relative l2 error between the analytic fidelity gradient and its central
// finite-difference approximation at x.
inline double fidelity_gradient_fd_error(const DegradationOperator& op, const Image& x,
                                         const Image& y, Fidelity fidelity,
                                         const PseudoinverseConfig& pinv = {}, double h = 1e-4) {
  const Image analytic = fidelity_gradient(op, x, y, fidelity, pinv);
  auto objective = [&](const Image& z) {
    const Image residual = y - op.apply(z);
    const Image mapped =
        fidelity == Fidelity::LeastSquares ? residual : op.apply_pseudoinverse(residual, pinv);
    return 0.5 * dot(mapped, mapped);
  };
  const Image fd = finite_difference_gradient(objective, x, h);
  return norm(analytic - fd) / norm(fd);
}

struct AngleStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Exploratory report: angles between the denoiser residual and random
// subgradients drawn from the admissible set at the denoised point, and from
// the subdifferential at x itself. Informational only; no pass/fail.
struct AngleReport {
  bool defined = false;  // false when the residual vanishes (e.g. x = 0)
  int samples = 0;
  AngleStats at_denoised;  // vs subgradients at D(x; sigma)
  AngleStats at_point;     // vs subgradients at x
};

inline AngleReport angle_report(const Image& x, double sigma, int levels, int samples,
                                std::uint64_t seed = 0xa27a1e5ULL) {
  if (samples < 1) throw std::invalid_argument("angle_report: samples must be >= 1");
  const double s2 = sigma * sigma;
  const WaveletCoeffs alpha = haar_analysis(x, levels);
  const WaveletCoeffs shrunk = soft_threshold(alpha, s2);
  const Image residual = x - wavelet_denoise(x, sigma, levels);
  const WaveletCoeffs z_red = haar_analysis(residual, levels);

  AngleReport report;
  report.samples = samples;
  double z_norm_sq = 0.0;
  for (double v : z_red.values) z_norm_sq += v * v;
  if (z_norm_sq == 0.0) return report;  // angles undefined
  report.defined = true;

  SplitMix64 rng(seed);
  auto angle_to = [&](const std::vector<double>& g) {
    double gg = 0.0, zg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gg += g[i] * g[i];
      zg += z_red.values[i] * g[i];
    }
    const double denom = std::sqrt(z_norm_sq * gg);
    const double c = denom == 0.0 ? 1.0 : std::clamp(zg / denom, -1.0, 1.0);
    return std::acos(c);
  };

  auto accumulate = [&](AngleStats& stats, bool at_denoised_point) {
    std::vector<double> g(alpha.values.size(), 0.0);
    for (int draw = 0; draw < samples; ++draw) {
      for (int y = 0; y < alpha.height; ++y)
        for (int xx = 0; xx < alpha.width; ++xx) {
          if (alpha.is_coarse(xx, y)) continue;
          const std::size_t i = static_cast<std::size_t>(y) * alpha.width + xx;
          const double ref = at_denoised_point ? shrunk.values[i] : alpha.values[i];
          // The interval case carries the only sampling freedom.
          g[i] = ref > 0.0 ? 1.0 : (ref < 0.0 ? -1.0 : rng.next_in(-1.0, 1.0));
        }
      const double a = angle_to(g);
      if (draw == 0) {
        stats.mean = stats.min = stats.max = a;
      } else {
        stats.mean += a;
        stats.min = std::min(stats.min, a);
        stats.max = std::max(stats.max, a);
      }
    }
    stats.mean /= samples;
  };

  accumulate(report.at_denoised, true);
  accumulate(report.at_point, false);
  return report;
}

}  // namespace red
