#include "p2c/noisemix.hpp"

#include "p2c/data.hpp"
#include "p2c/rng.hpp"

namespace p2c {

Tensor4 noise_field(const Shape4& shape, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> n(shape.numel());
  for (double& v : n) v = rng.uniform(0.0, 255.0);
  return Tensor4::from_data(shape, std::move(n));
}

Tensor4 mix_noise_with(const Tensor4& x_raw, double alpha, const Tensor4& noise) {
  check(x_raw.defined() && noise.defined(), "shape", "mix_noise: undefined input");
  check(alpha >= 0.0 && alpha <= 1.0, "config",
        "noise alpha " + std::to_string(alpha) + " outside [0,1]");
  check(noise.shape() == x_raw.shape(), "shape",
        "noise field " + noise.shape().str() + " does not match image " + x_raw.shape().str());
  std::vector<double> out(x_raw.numel());
  const double* xd = x_raw.data().data();
  const double* nd = noise.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * alpha + (1.0 - alpha) * nd[i];
  return Tensor4::from_data(x_raw.shape(), std::move(out));
}

Tensor4 mix_noise(const Tensor4& x_raw, const NoiseSpec& spec) {
  check(x_raw.defined(), "shape", "mix_noise: undefined input");
  return mix_noise_with(x_raw, spec.alpha, noise_field(x_raw.shape(), spec.seed));
}

std::vector<Tensor4> alpha_sweep(const Generator& g, const Tensor4& x_raw,
                                 const std::vector<double>& alphas, uint64_t seed) {
  check(g.defined(), "usage", "alpha_sweep: generator not built");
  check(!alphas.empty(), "usage", "alpha_sweep: empty alpha list");
  Tensor4 noise = noise_field(x_raw.shape(), seed);
  NoGradGuard ng;
  std::vector<Tensor4> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    Tensor4 mixed = mix_noise_with(x_raw, a, noise);
    out.push_back(g(normalize_to_unit(mixed)));
  }
  return out;
}

}  // namespace p2c
