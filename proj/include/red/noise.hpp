#pragma once

#include <cstdint>
#include <stdexcept>

#include "red/image.hpp"
#include "red/rng.hpp"

namespace red {

// Additive white Gaussian noise parameters. The seed makes synthesis a pure
// function of (image, spec): the same pair always produces the same output.
struct NoiseSpec {
  double sigma_e = 0.0;
  std::uint64_t seed = 0;
};

inline Image add_gaussian_noise(const Image& x, const NoiseSpec& spec) {
  if (!(spec.sigma_e >= 0.0))
    throw std::invalid_argument("add_gaussian_noise: sigma_e must be >= 0");
  Image out = x;
  SplitMix64 rng(spec.seed);
  for (double& s : out.samples()) s += spec.sigma_e * rng.next_gaussian();
  return out;
}

}  // namespace red
