#include <catch2/catch.hpp>

#include "red/checks.hpp"
#include "red/noise.hpp"
#include "red/solver.hpp"
#include "support/oracles.hpp"

using namespace red;

namespace {

double rel_diff(const Image& a, const Image& b) {
  const double scale = std::max(norm(a), norm(b));
  return scale == 0.0 ? 0.0 : norm(a - b) / scale;
}

}  // namespace

TEST_CASE("red gradient of a near no-op denoiser is near zero") {
  const Image x = oracle::random_image(8, 8, 1009);
  const Image g = red_gradient(x, DenoiserSpec::tikhonov(TikhonovOperator::Identity), 1e-9);
  CHECK(norm(g) <= 1e-12 * norm(x));
}

TEST_CASE("red gradient matches the prior-gradient route for the identity prior") {
  // both routes collapse to x * sigma^2 / (1 + sigma^2)
  Image x(4, 4);
  for (std::size_t i = 0; i < x.size(); ++i) x.samples()[i] = (i % 2 == 0) ? 2.0 : -4.0;
  const double sigma = 1.0;
  const Image g = red_gradient(x, DenoiserSpec::tikhonov(TikhonovOperator::Identity), sigma);
  const double factor = sigma * sigma / (1.0 + sigma * sigma);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(g.samples()[i] == Approx(x.samples()[i] / 2.0).margin(1e-12));
    CHECK(g.samples()[i] == Approx(factor * x.samples()[i]).margin(1e-12));
  }
}

TEST_CASE("wavelet red gradient has coefficients inside the unit box") {
  const Image x = oracle::random_image(16, 16, 1013);
  const double sigma = 1.5;
  const int levels = 2;
  const Image g = red_gradient(x, DenoiserSpec::wavelet(levels), sigma);
  const WaveletCoeffs z = haar_analysis((1.0 / (sigma * sigma)) * g, levels);
  for (int y = 0; y < z.height; ++y)
    for (int xx = 0; xx < z.width; ++xx) {
      const double v = z.values[static_cast<std::size_t>(y) * z.width + xx];
      if (z.is_coarse(xx, y))
        CHECK(std::abs(v) <= 1e-10);  // coarse band passes through the denoiser
      else
        CHECK(std::abs(v) <= 1.0 + 1e-10);
    }
}

TEST_CASE("fidelity gradient vanishes at a consistent point") {
  const Image truth = oracle::random_image(8, 8, 1019);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 0.8), 8, 8);
  const Image y = op.apply(truth);
  const double scale = norm(y);
  CHECK(norm(fidelity_gradient(op, truth, y, Fidelity::LeastSquares)) <= 1e-10 * scale);
  CHECK(norm(fidelity_gradient(op, truth, y, Fidelity::BackProjection, {0.0, 1e-12, 200})) <=
        1e-8 * scale);
}

TEST_CASE("fidelity gradients agree with central finite differences") {
  const Image truth = oracle::random_image(8, 8, 1021, 0.0, 50.0);
  const PseudoinverseConfig exact{0.0, 1e-12, 400};

  SECTION("deblurring") {
    const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 0.9), 8, 8);
    const Image y = add_gaussian_noise(op.apply(truth), {0.7, 5});
    Image x = truth;
    x.samples()[10] += 3.0;
    CHECK(fidelity_gradient_fd_error(op, x, y, Fidelity::LeastSquares, exact) <= 1e-5);
    CHECK(fidelity_gradient_fd_error(op, x, y, Fidelity::BackProjection, exact) <= 1e-5);
  }
  SECTION("super-resolution, scale 2") {
    const auto op = DegradationOperator::blur_downsample(make_gaussian_kernel(3, 0.9), 8, 8, 2);
    const Image y = add_gaussian_noise(op.apply(truth), {0.7, 6});
    Image x = truth;
    x.samples()[20] -= 2.0;
    CHECK(fidelity_gradient_fd_error(op, x, y, Fidelity::LeastSquares, exact) <= 1e-5);
    CHECK(fidelity_gradient_fd_error(op, x, y, Fidelity::BackProjection, exact) <= 1e-5);
  }
}

TEST_CASE("default step sizes") {
  const auto blur_op = DegradationOperator::blur(make_gaussian_kernel(9, 1.6), 16, 16);
  const auto identity_op = DegradationOperator::blur(make_uniform_kernel(1), 16, 16);

  CHECK(default_step_size(blur_op, Fidelity::BackProjection, 0.0, 0.1,
                          StepRule::InverseLipschitz) == 1.0);
  CHECK(default_step_size(identity_op, Fidelity::LeastSquares, 0.0, 0.1,
                          StepRule::InverseLipschitz) == Approx(1.0).margin(1e-9));

  // 2 / (1/sigma_e^2 + lambda) with sigma_e^2 = 2, lambda = 0.5
  CHECK(default_step_size(blur_op, Fidelity::LeastSquares, std::sqrt(2.0), 0.5,
                          StepRule::NoiseWeighted) == Approx(2.0).margin(1e-12));

  CHECK_THROWS_AS(default_step_size(blur_op, Fidelity::LeastSquares, 0.0, 0.5,
                                    StepRule::NoiseWeighted),
                  std::invalid_argument);
  CHECK_THROWS_AS(default_step_size(blur_op, Fidelity::BackProjection, 1.0, 0.5,
                                    StepRule::NoiseWeighted),
                  std::invalid_argument);
}

TEST_CASE("one exact least-squares step lands on y when A is the identity") {
  const Image x = oracle::random_image(8, 8, 1031);
  const Image y = oracle::random_image(8, 8, 1033);
  const auto op = DegradationOperator::blur(make_uniform_kernel(1), 8, 8);
  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = 0.0;
  cfg.sigma = 1.0;
  const Image next = step(x, y, op, DenoiserSpec::tikhonov(TikhonovOperator::Identity), cfg, 1.0);
  CHECK(rel_diff(next, y) <= 1e-12);
}

TEST_CASE("zero step size leaves the iterate unchanged") {
  const Image x = oracle::random_image(8, 8, 1039);
  const Image y = oracle::random_image(8, 8, 1049);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 1.0), 8, 8);
  SolverConfig cfg;
  cfg.lambda = 0.3;
  cfg.sigma = 2.0;
  const Image next = step(x, y, op, DenoiserSpec::tikhonov(TikhonovOperator::Identity), cfg, 0.0);
  CHECK(next == x);
}

TEST_CASE("step equals a dense-matrix evaluation of the update") {
  const int n = 8;
  const Image x = oracle::random_image(n, n, 1051, 0.0, 60.0);
  const Image truth = oracle::random_image(n, n, 1061, 0.0, 60.0);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 1.0), n, n);
  const Image y = op.apply(truth);
  const double sigma = 2.0, lambda = 0.4, mu = 0.8;

  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = lambda;
  cfg.sigma = sigma;
  const Image got =
      step(x, y, op, DenoiserSpec::tikhonov(TikhonovOperator::DiscreteGradient), cfg, mu);

  // dense route: x - mu (A^T (A x - y) + lambda (x - (sigma^2 R^T R + I)^{-1} x))
  const oracle::DenseMatrix a =
      oracle::materialize([&](const Image& v) { return op.apply(v); }, n, n);
  const oracle::DenseMatrix at = a.transposed();
  const oracle::DenseMatrix prior_system =
      oracle::gradient_gram_dense(n, n).scaled(sigma * sigma) +
      oracle::DenseMatrix::identity(n * n);
  const std::vector<double> denoised = oracle::gauss_solve(prior_system, x.samples());

  const std::vector<double> ax = a * x.samples();
  std::vector<double> residual(ax.size());
  for (std::size_t i = 0; i < ax.size(); ++i) residual[i] = ax[i] - y.samples()[i];
  const std::vector<double> fid = at * residual;

  for (std::size_t i = 0; i < got.size(); ++i) {
    const double expected =
        x.samples()[i] - mu * (fid[i] + lambda * (x.samples()[i] - denoised[i]));
    CHECK(got.samples()[i] == Approx(expected).margin(1e-9));
  }
}

TEST_CASE("solve with one iteration reduces to a single step") {
  const Image truth = oracle::random_image(8, 8, 1063);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 1.0), 8, 8);
  const Image y = op.apply(truth);
  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = 0.2;
  cfg.sigma = 1.5;
  cfg.iterations = 1;
  cfg.mu = 0.7;
  const DenoiserSpec denoiser = DenoiserSpec::tikhonov(TikhonovOperator::Identity);
  const SolveResult res = solve(y, op, denoiser, cfg, y);
  const Image expected = step(y, y, op, denoiser, cfg, 0.7);
  CHECK(res.image == expected);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].iteration == 1);
  CHECK_FALSE(res.trace[0].psnr.has_value());
}

TEST_CASE("a stationary point stays put") {
  // constant image, identity-kernel blur, y = x0: both gradients vanish
  const Image x0(8, 8, 33.0);
  const auto op = DegradationOperator::blur(make_uniform_kernel(1), 8, 8);
  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = 0.5;
  cfg.sigma = 2.0;
  cfg.iterations = 10;
  cfg.mu = 1.0;
  const SolveResult res = solve(x0, op, DenoiserSpec::tv(), cfg, x0);
  REQUIRE(res.trace.size() == 10);
  for (const IterationRecord& rec : res.trace) CHECK(rec.update_norm <= 1e-10);
}

TEST_CASE("traces are deterministic") {
  const Image truth = oracle::random_image(16, 16, 1069);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(5, 1.2), 16, 16);
  const Image y = add_gaussian_noise(op.apply(truth), {1.0, 11});
  SolverConfig cfg;
  cfg.fidelity = Fidelity::BackProjection;
  cfg.lambda = 0.1;
  cfg.sigma = 2.0;
  cfg.iterations = 8;
  cfg.pinv.eps = 0.01;
  const SolveResult a = solve(y, op, DenoiserSpec::tv(), cfg, y, &truth);
  const SolveResult b = solve(y, op, DenoiserSpec::tv(), cfg, y, &truth);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].psnr.value() == b.trace[i].psnr.value());
    CHECK(a.trace[i].update_norm == b.trace[i].update_norm);
    CHECK(a.trace[i].fidelity_gradient_norm == b.trace[i].fidelity_gradient_norm);
    CHECK(a.trace[i].red_gradient_norm == b.trace[i].red_gradient_norm);
  }
  CHECK(a.image == b.image);
}

TEST_CASE("pure least-squares descent has a non-increasing residual") {
  const Image truth = oracle::random_image(16, 16, 1087);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(5, 1.2), 16, 16);
  const Image y = add_gaussian_noise(op.apply(truth), {1.0, 13});
  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = 0.0;
  cfg.sigma = 1.0;
  const double mu = default_step_size(op, Fidelity::LeastSquares, 0.0, 0.0,
                                      StepRule::InverseLipschitz);
  const DenoiserSpec denoiser = DenoiserSpec::tikhonov(TikhonovOperator::Identity);
  Image x = y;
  double previous = norm(y - op.apply(x));
  for (int k = 0; k < 40; ++k) {
    x = step(x, y, op, denoiser, cfg, mu);
    const double current = norm(y - op.apply(x));
    CHECK(current <= previous + 1e-9);
    previous = current;
  }
}

TEST_CASE("diverging iterations abort with a diagnostic") {
  const Image y = oracle::random_image(8, 8, 1091);
  const auto op = DegradationOperator::blur(make_uniform_kernel(1), 8, 8);
  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = 1e9;  // absurd regularisation weight blows the iteration up
  cfg.sigma = 2.0;
  cfg.iterations = 100;
  cfg.mu = 1.0;
  CHECK_THROWS_AS(solve(y, op, DenoiserSpec::tikhonov(TikhonovOperator::Identity), cfg, y),
                  DivergedError);
}

TEST_CASE("least-squares descent with a tikhonov denoiser reaches the quadratic minimiser") {
  // small instance of the dense closed-form oracle
  const int n = 8;
  const Image truth = oracle::random_image(n, n, 1093, 0.0, 100.0);
  const auto op = DegradationOperator::blur(make_gaussian_kernel(3, 1.0), n, n);
  const Image y = add_gaussian_noise(op.apply(truth), {0.5, 17});
  const double sigma = 2.0, lambda = 0.5;

  SolverConfig cfg;
  cfg.fidelity = Fidelity::LeastSquares;
  cfg.lambda = lambda;
  cfg.sigma = sigma;
  cfg.iterations = 400;
  const SolveResult res =
      solve(y, op, DenoiserSpec::tikhonov(TikhonovOperator::Identity), cfg, y);

  // minimiser of (1/2)||y - A x||^2 + (lambda/2) x^T Q x with Q = c I,
  // c = sigma^2 / (1 + sigma^2)
  const double c = sigma * sigma / (1.0 + sigma * sigma);
  const oracle::DenseMatrix a =
      oracle::materialize([&](const Image& v) { return op.apply(v); }, n, n);
  const oracle::DenseMatrix system =
      a.transposed() * a + oracle::DenseMatrix::identity(n * n).scaled(lambda * c);
  const std::vector<double> rhs = a.transposed() * y.samples();
  const std::vector<double> minimiser = oracle::gauss_solve(system, rhs);

  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < minimiser.size(); ++i) {
    err += (res.image.samples()[i] - minimiser[i]) * (res.image.samples()[i] - minimiser[i]);
    scale += minimiser[i] * minimiser[i];
  }
  CHECK(std::sqrt(err / scale) <= 1e-6);
}
