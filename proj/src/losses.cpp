#include "p2c/losses.hpp"

#include "p2c/ops.hpp"

namespace p2c {

Tensor4 adversarial_loss_d(const Tensor4& real, const Tensor4& fake) {
  check(real.defined() && fake.defined(), "shape", "adversarial_loss_d: undefined grid");
  check(real.shape() == fake.shape(), "shape",
        "adversarial_loss_d: grid shapes differ, " + real.shape().str() + " vs " +
            fake.shape().str());
  return add(neg_mean_log(real), neg_mean_log1m(fake));
}

Tensor4 adversarial_loss_g(const Tensor4& fake) {
  check(fake.defined(), "shape", "adversarial_loss_g: undefined grid");
  return neg_mean_log(fake);
}

Tensor4 cycle_loss(const Tensor4& x, const Tensor4& rec_x, const Tensor4& y,
                   const Tensor4& rec_y) {
  return add(l1_mean(rec_x, x), l1_mean(rec_y, y));
}

Tensor4 perceptual_loss(const PerceptionNet& phi, const Tensor4& y_unpaired, const Tensor4& g_x,
                        const std::vector<double>& lambda) {
  check(phi.defined(), "usage", "perceptual_loss: empty perception net");
  check(lambda.size() == std::size_t(phi.taps()), "config",
        "lambda_n has " + std::to_string(lambda.size()) + " entries for " +
            std::to_string(phi.taps()) + " perception taps");
  std::vector<Tensor4> ft = phi.features(y_unpaired);
  std::vector<Tensor4> fg = phi.features(g_x);
  Tensor4 total;
  for (std::size_t i = 0; i < ft.size(); ++i) {
    Tensor4 term = scale(l1_mean(ft[i], fg[i]), lambda[i]);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

Tensor4 total_generator_loss(const GeneratorTerms& terms, const LossWeights& w) {
  check(w.gamma >= 0.0 && w.sigma >= 0.0, "config", "loss weights must be non-negative");
  Tensor4 total;
  auto accumulate = [&total](Tensor4 t) { total = total.defined() ? add(total, t) : t; };

  double mix_sum = 0.0;
  if (terms.adv_coarse.defined()) mix_sum += w.mix_coarse;
  if (terms.adv_fine.defined()) mix_sum += w.mix_fine;
  check(!(terms.adv_coarse.defined() || terms.adv_fine.defined()) || mix_sum > 0.0, "config",
        "adversarial mix weights sum to zero");
  if (terms.adv_coarse.defined()) accumulate(scale(terms.adv_coarse, w.mix_coarse / mix_sum));
  if (terms.adv_fine.defined()) accumulate(scale(terms.adv_fine, w.mix_fine / mix_sum));
  if (terms.cyc.defined()) accumulate(scale(terms.cyc, w.gamma));
  if (terms.percep.defined()) accumulate(scale(terms.percep, w.sigma));
  check(total.defined(), "config", "no objective terms enabled");
  return total;
}

}  // namespace p2c
