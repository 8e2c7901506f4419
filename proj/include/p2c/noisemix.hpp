#pragma once

#include <cstdint>
#include <vector>

#include "p2c/networks.hpp"
#include "p2c/tensor.hpp"

namespace p2c {

struct NoiseSpec {
  double alpha = 1.0;  // proportion of the raw image; must lie in [0,1]
  uint64_t seed = 0;
};

// Per-pixel, per-channel uniform [0,255] field, a pure function of
// (shape, seed).
Tensor4 noise_field(const Shape4& shape, uint64_t seed);

// x*alpha + (1-alpha)*n in raw [0,255] space, before any normalization.
Tensor4 mix_noise(const Tensor4& x_raw, const NoiseSpec& spec);
// Same blend against a caller-supplied noise field (sweeps reuse one field).
Tensor4 mix_noise_with(const Tensor4& x_raw, double alpha, const Tensor4& noise);

// Translates x_raw once per alpha with a single shared noise field, so
// differences across the sweep are attributable to alpha alone.
std::vector<Tensor4> alpha_sweep(const Generator& g, const Tensor4& x_raw,
                                 const std::vector<double>& alphas, uint64_t seed);

}  // namespace p2c
