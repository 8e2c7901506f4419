#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "p2c/common.hpp"
#include "p2c/gradcheck.hpp"
#include "p2c/losses.hpp"
#include "p2c/networks.hpp"
#include "p2c/ops.hpp"
#include "test_support.hpp"

using namespace p2c;

TEST_CASE("discriminator adversarial loss oracles") {
  Tensor4 half = Tensor4::full({1, 1, 2, 2}, 0.5);
  CHECK(std::fabs(adversarial_loss_d(half, half).item() - 2.0 * std::log(2.0)) <= 1e-12);

  Tensor4 good = Tensor4::full({1, 1, 2, 2}, 0.9);
  Tensor4 bad = Tensor4::full({1, 1, 2, 2}, 0.1);
  CHECK(std::fabs(adversarial_loss_d(good, bad).item() + 2.0 * std::log(0.9)) <= 1e-12);

  // perfect discriminator drives the loss toward zero
  Tensor4 near1 = Tensor4::full({1, 1, 2, 2}, 1.0 - 1e-9);
  Tensor4 near0 = Tensor4::full({1, 1, 2, 2}, 1e-9);
  CHECK(adversarial_loss_d(near1, near0).item() < 1e-6);
  CHECK(adversarial_loss_d(near1, near0).item() > 0.0);

  // patch cells are averaged, not summed
  Tensor4 grid = Tensor4::from_data({1, 1, 1, 2}, {0.5, 0.9});
  double expect = -(std::log(0.5) + std::log(0.9)) / 2.0 - (std::log(0.5) + std::log(0.1)) / 2.0;
  CHECK(std::fabs(adversarial_loss_d(grid, grid).item() - expect) <= 1e-12);

  CHECK_THROWS_AS(adversarial_loss_d(half, Tensor4::full({1, 1, 4, 4}, 0.5)), Error);
}

TEST_CASE("generator adversarial loss oracles") {
  CHECK(std::fabs(adversarial_loss_g(Tensor4::full({1, 1, 2, 2}, 0.5)).item() -
                  std::log(2.0)) <= 1e-12);
  CHECK(std::fabs(adversarial_loss_g(Tensor4::full({1, 1, 2, 2}, 0.25)).item() -
                  std::log(4.0)) <= 1e-12);
  // fooled discriminator drives the non-saturating loss toward zero
  CHECK(adversarial_loss_g(Tensor4::full({1, 1, 2, 2}, 1.0 - 1e-9)).item() < 1e-6);
  CHECK(adversarial_loss_g(Tensor4::full({1, 1, 2, 2}, 1.0 - 1e-9)).item() > 0.0);
}

TEST_CASE("cycle loss oracles") {
  Rng rng(31);
  Tensor4 x = testsup::random_tensor({1, 3, 4, 4}, rng, -1.0, 1.0);
  Tensor4 y = testsup::random_tensor({1, 3, 4, 4}, rng, -1.0, 1.0);
  CHECK(cycle_loss(x, x, y, y).item() == 0.0);

  // both reconstructions off by a constant 0.5: 0.5 + 0.5 = 1.0
  auto offset = [](const Tensor4& t, double d) {
    Tensor4 o = t.clone();
    for (double& v : o.data()) v += d;
    return o;
  };
  CHECK(std::fabs(cycle_loss(x, offset(x, 0.5), y, offset(y, -0.5)).item() - 1.0) <= 1e-12);

  // brute-force agreement on a random 2x2 case
  Tensor4 a = testsup::random_tensor({1, 1, 2, 2}, rng, -1.0, 1.0);
  Tensor4 ra = testsup::random_tensor({1, 1, 2, 2}, rng, -1.0, 1.0);
  Tensor4 b = testsup::random_tensor({1, 1, 2, 2}, rng, -1.0, 1.0);
  Tensor4 rb = testsup::random_tensor({1, 1, 2, 2}, rng, -1.0, 1.0);
  double manual = 0.0;
  for (int i = 0; i < 4; ++i) manual += std::fabs(ra.data()[i] - a.data()[i]) / 4.0;
  for (int i = 0; i < 4; ++i) manual += std::fabs(rb.data()[i] - b.data()[i]) / 4.0;
  CHECK(std::fabs(cycle_loss(a, ra, b, rb).item() - manual) <= 1e-12);

  CHECK_THROWS_AS(cycle_loss(x, Tensor4::zeros({1, 3, 2, 2}), y, y), Error);
}

TEST_CASE("perceptual loss oracles") {
  PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  Rng rng(37);
  Tensor4 y = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
  Tensor4 g = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
  std::vector<double> lam = {1.0, 0.7, 0.4};

  CHECK(perceptual_loss(phi, y, y, lam).item() == 0.0);

  double base = perceptual_loss(phi, y, g, lam).item();
  CHECK(base > 0.0);
  std::vector<double> lam2 = {2.0, 1.4, 0.8};
  CHECK(std::fabs(perceptual_loss(phi, y, g, lam2).item() - 2.0 * base) <= 1e-12);

  // per-tap manual sum
  NoGradGuard ng;
  std::vector<Tensor4> fy = phi.features(y);
  std::vector<Tensor4> fg = phi.features(g);
  double manual = 0.0;
  for (std::size_t i = 0; i < fy.size(); ++i) manual += lam[i] * l1_mean(fy[i], fg[i]).item();
  CHECK(std::fabs(base - manual) <= 1e-12);

  CHECK_THROWS_AS(perceptual_loss(phi, y, g, {1.0}), Error);
}

TEST_CASE("perceptual gradients reach the generated image only") {
  PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  Rng rng(41);
  Tensor4 y = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
  Tensor4 g = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0, true);
  backward(perceptual_loss(phi, y, g, {1.0, 0.7, 0.4}));
  CHECK(g.grad().size() == g.numel());
  for (const auto& [name, t] : phi.named_parameters()) CHECK(t.get()->grad.empty());
}

TEST_CASE("total objective composition") {
  LossWeights w;  // gamma 10, sigma 2, mix 0.5/0.5
  auto s = [](double v) { return Tensor4::full({1, 1, 1, 1}, v); };

  // adv terms 1 each, cyc 0.2, percep 0.1 -> 1 + 2 + 0.2 = 3.2
  GeneratorTerms t{s(1.0), s(1.0), s(0.2), s(0.1)};
  CHECK(std::fabs(total_generator_loss(t, w).item() - 3.2) <= 1e-12);

  GeneratorTerms zero{s(0.0), s(0.0), s(0.0), s(0.0)};
  CHECK(total_generator_loss(zero, w).item() == 0.0);

  // gamma = sigma = 0 reduces to the pure adversarial mix
  LossWeights adv_only;
  adv_only.gamma = 0.0;
  adv_only.sigma = 0.0;
  GeneratorTerms t2{s(0.6), s(0.8), s(5.0), s(7.0)};
  CHECK(std::fabs(total_generator_loss(t2, adv_only).item() - 0.7) <= 1e-12);

  // linear in each component
  GeneratorTerms lo{s(0.5), s(0.5), s(0.3), s(0.2)};
  GeneratorTerms hi{s(0.5), s(0.5), s(0.5), s(0.2)};
  CHECK(std::fabs((total_generator_loss(hi, w).item() - total_generator_loss(lo, w).item()) -
                  10.0 * 0.2) <= 1e-12);
}

TEST_CASE("dropped terms vanish from the composition") {
  LossWeights w;
  auto s = [](double v) { return Tensor4::full({1, 1, 1, 1}, v); };
  Tensor4 none;

  // single head renormalizes to unit adversarial weight
  GeneratorTerms coarse_only{s(0.7), none, none, none};
  CHECK(total_generator_loss(coarse_only, w).item() == 0.7);
  GeneratorTerms fine_only{none, s(0.3), none, none};
  CHECK(total_generator_loss(fine_only, w).item() == 0.3);

  // no cycle term: exactly the adv mix plus sigma*percep
  GeneratorTerms no_cyc{s(1.0), s(1.0), none, s(0.1)};
  CHECK(std::fabs(total_generator_loss(no_cyc, w).item() - 1.2) <= 1e-12);
  GeneratorTerms no_percep{s(1.0), s(1.0), s(0.2), none};
  CHECK(std::fabs(total_generator_loss(no_percep, w).item() - 3.0) <= 1e-12);

  // degenerate configurations are rejected
  GeneratorTerms nothing{none, none, none, none};
  CHECK_THROWS_AS(total_generator_loss(nothing, w), Error);
  LossWeights no_mix;
  no_mix.mix_coarse = 0.0;
  CHECK_THROWS_AS(total_generator_loss(coarse_only, no_mix), Error);
}

TEST_CASE("loss gradients pass the finite-difference check") {
  Rng rng(43);
  Tensor4 lr = testsup::random_tensor({1, 1, 3, 3}, rng, -1.5, 1.5, true);
  Tensor4 lf = testsup::random_tensor({1, 1, 3, 3}, rng, -1.5, 1.5, true);
  auto adv_d = [&] { return adversarial_loss_d(sigmoid(lr), sigmoid(lf)); };
  CHECK(grad_check(adv_d, {lr, lf}) < 1e-4);
  auto adv_g = [&] { return adversarial_loss_g(sigmoid(lf)); };
  CHECK(grad_check(adv_g, {lf}) < 1e-4);

  // reconstructions held a fixed distance from their targets so the L1 kink
  // stays outside the finite-difference window
  Tensor4 x = testsup::random_tensor({1, 2, 3, 3}, rng, -1.0, 1.0, true);
  Tensor4 y = testsup::random_tensor({1, 2, 3, 3}, rng, -1.0, 1.0, true);
  auto shifted = [&](const Tensor4& t) {
    Tensor4 o = t.clone();
    for (double& v : o.data()) v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 0.8);
    o.set_requires_grad(true);
    return o;
  };
  Tensor4 rx = shifted(x);
  Tensor4 ry = shifted(y);
  auto cyc = [&] { return cycle_loss(x, rx, y, ry); };
  CHECK(grad_check(cyc, {x, rx, y, ry}) < 1e-4);

  PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(7, {4, 2}));
  Tensor4 yu = testsup::random_tensor({1, 3, 8, 8}, rng, -1.0, 1.0);
  Tensor4 gx = testsup::random_tensor({1, 3, 8, 8}, rng, -1.0, 1.0, true);
  auto percep = [&] { return perceptual_loss(phi, yu, gx, {1.0, 0.7}); };
  CHECK(grad_check(percep, {gx}, 1e-5, 12, 2) < 1e-4);
}

TEST_CASE("composed objective gradient agrees with finite differences") {
  Rng rng(47);
  Tensor4 lc = testsup::random_tensor({1, 1, 2, 2}, rng, -1.0, 1.0, true);
  Tensor4 lf = testsup::random_tensor({1, 1, 4, 4}, rng, -1.0, 1.0, true);
  Tensor4 x = testsup::random_tensor({1, 2, 3, 3}, rng, -1.0, 1.0, true);
  Tensor4 rx = testsup::random_tensor({1, 2, 3, 3}, rng, 1.5, 2.5, true);
  LossWeights w;
  auto f = [&] {
    GeneratorTerms t;
    t.adv_coarse = adversarial_loss_g(sigmoid(lc));
    t.adv_fine = adversarial_loss_g(sigmoid(lf));
    t.cyc = l1_mean(rx, x);
    return total_generator_loss(t, w);
  };
  CHECK(grad_check(f, {lc, lf, x, rx}) < 1e-4);
}
