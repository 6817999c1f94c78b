#pragma once

// Conjugate gradients for symmetric positive (semi)definite systems given as
// a matvec callback. Converges when the relative residual drops below tol;
// failure to converge within the iteration cap is an error that reports the
// final residual.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace red {

class CgError : public std::runtime_error {
 public:
  CgError(const std::string& msg, double residual) : std::runtime_error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

template <typename Matvec>
CgResult conjugate_gradient(Matvec&& matvec, const std::vector<double>& b, double tol,
                            int max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("conjugate_gradient: tol must be > 0");
  if (max_iters < 1) throw std::invalid_argument("conjugate_gradient: max_iters must be >= 1");

  const std::size_t n = b.size();
  auto dot = [n](const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += u[i] * v[i];
    return acc;
  };

  CgResult result;
  result.x.assign(n, 0.0);
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) return result;

  std::vector<double> r = b;
  std::vector<double> p = b;
  double rr = dot(r, r);
  for (int it = 1; it <= max_iters; ++it) {
    const std::vector<double> ap = matvec(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw CgError("conjugate_gradient: operator not positive definite on search direction",
                    std::sqrt(rr) / b_norm);
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) result.x[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    const double rr_next = dot(r, r);
    result.iterations = it;
    result.relative_residual = std::sqrt(rr_next) / b_norm;
    if (result.relative_residual <= tol) return result;
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  throw CgError("conjugate_gradient: no convergence after " + std::to_string(max_iters) +
                    " iterations, relative residual " + std::to_string(result.relative_residual),
                result.relative_residual);
}

}  // namespace red
