#pragma once

#include <vector>

#include "p2c/networks.hpp"
#include "p2c/tensor.hpp"

namespace p2c {

struct LossWeights {
  double gamma = 10.0;
  double sigma = 2.0;
  // relative weights of the coarse/fine adversarial terms, renormalized over
  // the heads actually enabled
  double mix_coarse = 0.5;
  double mix_fine = 0.5;
  std::vector<double> lambda = {1.0, 1.0, 1.0, 1.0};  // one per perception tap
};

// -mean(log real) - mean(log(1 - fake)) over patch grid cells, logs clamped
// at 1e-12.
Tensor4 adversarial_loss_d(const Tensor4& real, const Tensor4& fake);

// Non-saturating generator side: -mean(log fake).
Tensor4 adversarial_loss_g(const Tensor4& fake);

// l1_mean(rec_x, x) + l1_mean(rec_y, y).
Tensor4 cycle_loss(const Tensor4& x, const Tensor4& rec_x, const Tensor4& y, const Tensor4& rec_y);

// sum_n lambda[n] * l1_mean(phi_n(y_unpaired), phi_n(g_x)). Gradients reach
// g_x only; phi is frozen and y_unpaired is a data leaf.
Tensor4 perceptual_loss(const PerceptionNet& phi, const Tensor4& y_unpaired, const Tensor4& g_x,
                        const std::vector<double>& lambda);

// mix_c*adv_coarse + mix_f*adv_fine + gamma*cyc + sigma*percep. Undefined
// handles drop their term; the adversarial mix renormalizes over present
// heads so a single-discriminator variant keeps unit adversarial weight.
struct GeneratorTerms {
  Tensor4 adv_coarse, adv_fine, cyc, percep;
};
Tensor4 total_generator_loss(const GeneratorTerms& terms, const LossWeights& w);

}  // namespace p2c
