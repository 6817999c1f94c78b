#pragma once

// Gradient-descent restoration. Each step combines a data-fidelity gradient
// (least squares or back-projection) with the denoiser residual
// x - D(x; sigma) acting as the regularisation direction:
//
//   x_{k+1} = x_k - mu * (fidelity_gradient(x_k) + lambda * (x_k - D(x_k)))
//
// The iteration budget is fixed; there is no stopping rule. A non-finite
// iterate aborts with a diagnostic, which surfaces divergent step-size and
// lambda combinations during grid search.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "red/denoisers.hpp"
#include "red/image.hpp"
#include "red/operators.hpp"

namespace red {

enum class Fidelity { LeastSquares, BackProjection };
enum class StepRule { InverseLipschitz, NoiseWeighted };

struct SolverConfig {
  Fidelity fidelity = Fidelity::LeastSquares;
  double lambda = 0.02;
  double sigma = 3.0;  // denoiser noise level, distinct from the observation noise
  StepRule step_rule = StepRule::InverseLipschitz;
  int iterations = 200;
  double sigma_e = 0.0;          // observation noise level, used by NoiseWeighted
  PseudoinverseConfig pinv{};    // back-projection only; pinv.eps regularises the FFT path
  std::optional<double> mu{};    // explicit step size; bypasses step_rule when set

  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("SolverConfig: lambda must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("SolverConfig: sigma must be > 0");
    if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations must be >= 1");
  }
};

struct IterationRecord {
  int iteration = 0;
  std::optional<double> psnr{};  // vs the reference image, when one is given
  double update_norm = 0.0;
  double fidelity_gradient_norm = 0.0;
  double red_gradient_norm = 0.0;
};

using IterationTrace = std::vector<IterationRecord>;

struct SolveResult {
  Image image;
  IterationTrace trace;
  double mu = 0.0;  // step size actually used
};

class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& msg, int iteration)
      : std::runtime_error(msg), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// x - D(x; sigma), the regularisation direction.
inline Image red_gradient(const Image& x, const DenoiserSpec& denoiser, double sigma) {
  return x - denoise(denoiser, x, sigma);
}

inline Image fidelity_gradient(const DegradationOperator& op, const Image& x, const Image& y,
                               Fidelity fidelity, const PseudoinverseConfig& pinv = {}) {
  const Image residual = op.apply(x) - y;
  if (fidelity == Fidelity::LeastSquares) return op.apply_adjoint(residual);
  return op.apply_pseudoinverse(residual, pinv);
}

// InverseLipschitz: 1 / ||A^+ A|| = 1 for back-projection, 1 / ||A^T A||
// (power method) for least squares. NoiseWeighted: 2 / (1/sigma_e^2 + lambda),
// valid only for least squares with sigma_e > 0.
inline double default_step_size(const DegradationOperator& op, Fidelity fidelity, double sigma_e,
                                double lambda, StepRule rule) {
  if (rule == StepRule::NoiseWeighted) {
    if (fidelity != Fidelity::LeastSquares)
      throw std::invalid_argument("default_step_size: NoiseWeighted applies to least squares only");
    if (!(sigma_e > 0.0))
      throw std::invalid_argument("default_step_size: NoiseWeighted needs sigma_e > 0");
    return 2.0 / (1.0 / (sigma_e * sigma_e) + lambda);
  }
  if (fidelity == Fidelity::BackProjection) return 1.0;
  return 1.0 / operator_norm_sq(op).value;
}

namespace detail {

struct StepParts {
  Image next;
  double fidelity_norm = 0.0;
  double red_norm = 0.0;
};

inline StepParts step_parts(const Image& x, const Image& y, const DegradationOperator& op,
                            const DenoiserSpec& denoiser, const SolverConfig& cfg, double mu) {
  StepParts parts{x, 0.0, 0.0};
  const Image fid = fidelity_gradient(op, x, y, cfg.fidelity, cfg.pinv);
  const Image reg = red_gradient(x, denoiser, cfg.sigma);
  parts.fidelity_norm = norm(fid);
  parts.red_norm = norm(reg);
  for (std::size_t i = 0; i < x.size(); ++i)
    parts.next.samples()[i] = x.samples()[i] - mu * (fid.samples()[i] + cfg.lambda * reg.samples()[i]);
  return parts;
}

}  // namespace detail

inline Image step(const Image& x, const Image& y, const DegradationOperator& op,
                  const DenoiserSpec& denoiser, const SolverConfig& cfg, double mu) {
  cfg.validate();
  return detail::step_parts(x, y, op, denoiser, cfg, mu).next;
}

// Runs cfg.iterations steps from x0 and records the full trace. When a
// reference image is supplied, per-iteration PSNR is recorded against it
// (optionally on a border-cropped region). Deterministic given its inputs.
inline SolveResult solve(const Image& y, const DegradationOperator& op,
                         const DenoiserSpec& denoiser, const SolverConfig& cfg, const Image& x0,
                         const Image* reference = nullptr, int psnr_crop = 0) {
  cfg.validate();
  const double mu =
      cfg.mu ? *cfg.mu : default_step_size(op, cfg.fidelity, cfg.sigma_e, cfg.lambda, cfg.step_rule);

  SolveResult result;
  result.mu = mu;
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  Image x = x0;
  for (int k = 1; k <= cfg.iterations; ++k) {
    detail::StepParts parts = detail::step_parts(x, y, op, denoiser, cfg, mu);
    if (!all_finite(parts.next))
      throw DivergedError("solve: non-finite iterate at iteration " + std::to_string(k) +
                              " (mu=" + std::to_string(mu) + ", lambda=" + std::to_string(cfg.lambda) +
                              "), step size likely too large",
                          k);
    IterationRecord record;
    record.iteration = k;
    record.update_norm = norm(parts.next - x);
    record.fidelity_gradient_norm = parts.fidelity_norm;
    record.red_gradient_norm = parts.red_norm;
    if (reference != nullptr)
      record.psnr = psnr_crop > 0 ? psnr(crop(*reference, psnr_crop), crop(parts.next, psnr_crop))
                                  : psnr(*reference, parts.next);
    result.trace.push_back(record);
    x = std::move(parts.next);
  }
  result.image = std::move(x);
  return result;
}

}  // namespace red
