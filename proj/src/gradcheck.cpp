#include "p2c/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "p2c/common.hpp"
#include "p2c/losses.hpp"
#include "p2c/networks.hpp"
#include "p2c/ops.hpp"
#include "p2c/rng.hpp"

namespace p2c {

namespace {

double eval_scalar(const std::function<Tensor4()>& f) {
  NoGradGuard ng;
  Tensor4 out = f();
  check(out.defined(), "usage", "grad_check: f returned an undefined tensor");
  const double v = out.item();
  check(std::isfinite(v), "numeric", "grad_check: non-finite f");
  return v;
}

double grad_check_impl(const std::function<Tensor4()>& f, const std::vector<Tensor4>& params,
                       double eps, int max_coords_per_param, uint64_t seed, bool corrupt_first) {
  check(eps >= 1e-7 && eps <= 1e-4, "usage", "grad_check eps must lie in [1e-7, 1e-4]");
  check(!params.empty(), "usage", "grad_check needs at least one parameter");
  check(max_coords_per_param >= 1, "usage", "grad_check needs at least one coordinate per parameter");
  for (const Tensor4& p : params)
    check(p.defined() && p.requires_grad(), "usage",
          "grad_check parameters must be defined and require gradients");

  Tensor4 out = f();
  check(out.defined(), "usage", "grad_check: f returned an undefined tensor");
  check(out.shape() == Shape4{1, 1, 1, 1}, "usage", "grad_check: f must return a scalar");
  check(std::isfinite(out.item()), "numeric", "grad_check: non-finite f");

  // A constant f never built a tape; its gradient is identically zero.
  std::vector<std::vector<double>> analytic(params.size());
  if (out.get()->requires_grad) {
    backward(out);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::vector<double>& g = params[i].get()->grad;
      analytic[i] = g.size() == params[i].numel() ? g : std::vector<double>(params[i].numel(), 0.0);
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i)
      analytic[i].assign(params[i].numel(), 0.0);
  }

  double max_rel = 0.0;
  bool corrupt_pending = corrupt_first;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor4 p = params[pi];
    std::vector<double>& data = p.data();
    const std::size_t n = data.size();

    std::vector<std::size_t> coords;
    if (n <= std::size_t(max_coords_per_param)) {
      coords.resize(n);
      std::iota(coords.begin(), coords.end(), std::size_t(0));
    } else {
      Rng r(mix_seed(seed, pi, 0x6C6C));
      for (int k = 0; k < max_coords_per_param; ++k) coords.push_back(r.index(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    for (std::size_t j : coords) {
      const double old = data[j];
      data[j] = old + eps;
      const double fp = eval_scalar(f);
      data[j] = old - eps;
      const double fm = eval_scalar(f);
      data[j] = old;
      const double numeric = (fp - fm) / (2.0 * eps);
      double a = analytic[pi][j];
      if (corrupt_pending) {
        a += 0.01 * (1.0 + std::fabs(a));
        corrupt_pending = false;
      }
      const double rel =
          std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

Tensor4 rand_uniform(Shape4 s, double lo, double hi, bool rg, uint64_t seed) {
  Rng r(seed);
  std::vector<double> v(s.numel());
  for (double& e : v) e = r.uniform(lo, hi);
  return Tensor4::from_data(s, std::move(v), rg);
}

// Magnitude in [lo_mag, hi_mag] with random sign: keeps relu/l1 kinks a safe
// distance from the finite-difference window.
Tensor4 rand_signed(Shape4 s, double lo_mag, double hi_mag, bool rg, uint64_t seed) {
  Rng r(seed);
  std::vector<double> v(s.numel());
  for (double& e : v) {
    const double m = r.uniform(lo_mag, hi_mag);
    e = r.uniform() < 0.5 ? -m : m;
  }
  return Tensor4::from_data(s, std::move(v), rg);
}

// Smooth random-weight functional: gradients flow through every element with
// element-dependent sensitivity, so sign and scale errors cannot cancel.
Tensor4 scalarize(const Tensor4& y) { return neg_mean_log(sigmoid(y)); }

}  // namespace

double grad_check(const std::function<Tensor4()>& f, const std::vector<Tensor4>& params,
                  double eps, int max_coords_per_param, uint64_t seed) {
  return grad_check_impl(f, params, eps, max_coords_per_param, seed, false);
}

std::vector<GradCheckEntry> gradcheck_suite(const GradCheckOptions& opt) {
  check(opt.size >= 8 && (opt.size & (opt.size - 1)) == 0, "usage",
        "gradcheck size must be a power of two, at least 8");
  const double eps = opt.eps;
  const uint64_t seed = opt.seed;
  const int S = opt.size;

  std::vector<GradCheckEntry> out;
  bool corrupt_next = opt.corrupt;
  auto run = [&](const char* name, const std::function<Tensor4()>& f,
                 const std::vector<Tensor4>& params, int coords) {
    const double err =
        grad_check_impl(f, params, eps, coords, mix_seed(seed, out.size()), corrupt_next);
    corrupt_next = false;
    out.push_back({name, err});
  };

  {
    Tensor4 x = rand_uniform({1, 2, 6, 6}, -1.0, 1.0, true, mix_seed(seed, 0x10));
    Tensor4 w = rand_uniform({3, 2, 3, 3}, -0.5, 0.5, true, mix_seed(seed, 0x11));
    Tensor4 b = rand_uniform({1, 3, 1, 1}, -0.3, 0.3, true, mix_seed(seed, 0x12));
    ConvSpec spec{2, 3, 3, 2, 1};
    run("conv2d", [=] { return scalarize(conv2d(x, w, b, spec)); }, {x, w, b}, 8);
  }
  {
    Tensor4 x = rand_uniform({1, 3, 5, 5}, -1.0, 1.0, true, mix_seed(seed, 0x13));
    Tensor4 w = rand_uniform({3, 2, 4, 4}, -0.5, 0.5, true, mix_seed(seed, 0x14));
    Tensor4 b = rand_uniform({1, 2, 1, 1}, -0.3, 0.3, true, mix_seed(seed, 0x15));
    ConvSpec spec{3, 2, 4, 2, 1};
    run("conv_transpose2d", [=] { return scalarize(conv_transpose2d(x, w, b, spec)); }, {x, w, b},
        8);
  }
  {
    Tensor4 x = rand_uniform({2, 3, 6, 6}, -1.0, 1.0, true, mix_seed(seed, 0x16));
    Tensor4 sc = rand_signed({1, 3, 1, 1}, 0.5, 1.5, true, mix_seed(seed, 0x17));
    Tensor4 sh = rand_uniform({1, 3, 1, 1}, -0.5, 0.5, true, mix_seed(seed, 0x18));
    run("instance_norm2d", [=] { return scalarize(instance_norm2d(x, sc, sh)); }, {x, sc, sh}, 8);
  }
  {
    Tensor4 x = rand_signed({1, 2, 5, 5}, 0.2, 1.0, true, mix_seed(seed, 0x19));
    run("relu", [=] { return scalarize(relu(x)); }, {x}, 12);
  }
  {
    Tensor4 x = rand_signed({1, 2, 5, 5}, 0.2, 1.0, true, mix_seed(seed, 0x1A));
    run("leaky_relu", [=] { return scalarize(leaky_relu(x)); }, {x}, 12);
  }
  {
    Tensor4 x = rand_uniform({1, 2, 5, 5}, -2.0, 2.0, true, mix_seed(seed, 0x1B));
    run("tanh", [=] { return scalarize(tanh(x)); }, {x}, 12);
  }
  {
    Tensor4 x = rand_uniform({1, 2, 5, 5}, -3.0, 3.0, true, mix_seed(seed, 0x1C));
    run("sigmoid", [=] { return scalarize(sigmoid(x)); }, {x}, 12);
  }
  {
    Tensor4 a = rand_uniform({1, 3, 4, 4}, -1.0, 1.0, true, mix_seed(seed, 0x1D));
    Tensor4 d = rand_signed({1, 3, 4, 4}, 0.2, 0.8, false, mix_seed(seed, 0x1E));
    std::vector<double> bd(a.numel());
    for (std::size_t i = 0; i < bd.size(); ++i) bd[i] = a.data()[i] + d.data()[i];
    Tensor4 b = Tensor4::from_data({1, 3, 4, 4}, std::move(bd), true);
    run("l1_mean", [=] { return l1_mean(a, b); }, {a, b}, 12);
  }
  {
    Tensor4 logits = rand_uniform({4, 3, 1, 1}, -2.0, 2.0, true, mix_seed(seed, 0x1F));
    std::vector<int> labels{0, 1, 2, 0};
    run("softmax_cross_entropy", [=] { return softmax_cross_entropy(logits, labels); }, {logits},
        12);
  }
  {
    Tensor4 ar = rand_uniform({2, 1, 4, 4}, -2.0, 2.0, true, mix_seed(seed, 0x20));
    Tensor4 af = rand_uniform({2, 1, 4, 4}, -2.0, 2.0, true, mix_seed(seed, 0x21));
    run("adversarial_loss_d", [=] { return adversarial_loss_d(sigmoid(ar), sigmoid(af)); },
        {ar, af}, 10);
  }
  {
    Tensor4 af = rand_uniform({2, 1, 4, 4}, -2.0, 2.0, true, mix_seed(seed, 0x22));
    run("adversarial_loss_g", [=] { return adversarial_loss_g(sigmoid(af)); }, {af}, 10);
  }
  {
    Tensor4 x = rand_uniform({1, 3, 4, 4}, -1.0, 1.0, true, mix_seed(seed, 0x23));
    Tensor4 y = rand_uniform({1, 3, 4, 4}, -1.0, 1.0, true, mix_seed(seed, 0x24));
    auto offset = [&](const Tensor4& base, uint64_t salt) {
      Tensor4 d = rand_signed({1, 3, 4, 4}, 0.2, 0.8, false, salt);
      std::vector<double> v(base.numel());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = base.data()[i] + d.data()[i];
      return Tensor4::from_data({1, 3, 4, 4}, std::move(v), true);
    };
    Tensor4 rec_x = offset(x, mix_seed(seed, 0x25));
    Tensor4 rec_y = offset(y, mix_seed(seed, 0x26));
    run("cycle_loss", [=] { return cycle_loss(x, rec_x, y, rec_y); }, {x, y, rec_x, rec_y}, 8);
  }
  {
    PerceptionConfig pc;
    pc.base_channels = 4;
    pc.layers = 3;
    PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(mix_seed(seed, 0x27), pc));
    Tensor4 y = rand_uniform({1, 3, 8, 8}, -0.9, 0.9, false, mix_seed(seed, 0x28));
    Tensor4 gx = rand_uniform({1, 3, 8, 8}, -0.9, 0.9, true, mix_seed(seed, 0x29));
    std::vector<double> lambda{1.0, 0.7, 0.4};
    run("perceptual_loss", [=, &phi] { return perceptual_loss(phi, y, gx, lambda); }, {gx}, 12);
  }
  GeneratorConfig gc;
  gc.base_channels = 8;
  gc.residual_blocks = 1;
  {
    Generator g(gc, mix_seed(seed, 0x2A));
    Tensor4 x = rand_uniform({1, 3, S, S}, -0.9, 0.9, true, mix_seed(seed, 0x2B));
    std::vector<Tensor4> params{x};
    for (auto& [name, t] : g.named_parameters()) params.push_back(t);
    run("generator_forward", [=, &g] { return scalarize(g(x)); }, params, 3);
  }
  {
    PatchDiscriminator d(DiscriminatorKind::fine(4), S, mix_seed(seed, 0x2C), 8);
    Tensor4 x = rand_uniform({1, 3, S, S}, -0.9, 0.9, true, mix_seed(seed, 0x2D));
    std::vector<Tensor4> params{x};
    for (auto& [name, t] : d.named_parameters()) params.push_back(t);
    run("discriminator_forward", [=, &d] { return adversarial_loss_g(d(x)); }, params, 3);
  }
  {
    // The full two-direction objective of a toy model, checked against the
    // generators' parameters.
    Generator g1(gc, mix_seed(seed, 0x2E));
    Generator g2(gc, mix_seed(seed, 0x2F));
    PatchDiscriminator dca(DiscriminatorKind::coarse(S / 8), S, mix_seed(seed, 0x30), 8);
    PatchDiscriminator dcb(DiscriminatorKind::coarse(S / 8), S, mix_seed(seed, 0x31), 8);
    PatchDiscriminator dfa(DiscriminatorKind::fine(S / 2), S, mix_seed(seed, 0x32), 8);
    PatchDiscriminator dfb(DiscriminatorKind::fine(S / 2), S, mix_seed(seed, 0x33), 8);
    PerceptionConfig pc;
    pc.base_channels = 4;
    pc.layers = 3;
    PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(mix_seed(seed, 0x34), pc));
    LossWeights w;
    w.lambda = {1.0, 0.7, 0.4};
    Tensor4 x = rand_uniform({1, 3, S, S}, -0.9, 0.9, false, mix_seed(seed, 0x35));
    Tensor4 y = rand_uniform({1, 3, S, S}, -0.9, 0.9, false, mix_seed(seed, 0x36));
    auto objective = [&, x, y, w] {
      Tensor4 yhat = g1(x);
      Tensor4 xhat = g2(y);
      GeneratorTerms t_ab, t_ba;
      t_ab.adv_coarse = adversarial_loss_g(dcb(yhat));
      t_ba.adv_coarse = adversarial_loss_g(dca(xhat));
      t_ab.adv_fine = adversarial_loss_g(dfb(yhat));
      t_ba.adv_fine = adversarial_loss_g(dfa(xhat));
      t_ab.cyc = l1_mean(g2(yhat), x);
      t_ba.cyc = l1_mean(g1(xhat), y);
      t_ab.percep = perceptual_loss(phi, y, yhat, w.lambda);
      return add(total_generator_loss(t_ab, w), total_generator_loss(t_ba, w));
    };
    std::vector<Tensor4> params;
    for (auto& [name, t] : g1.named_parameters()) params.push_back(t);
    for (auto& [name, t] : g2.named_parameters()) params.push_back(t);
    run("total_objective", objective, params, 2);
  }
  return out;
}

}  // namespace p2c
