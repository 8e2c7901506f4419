#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "p2c/common.hpp"
#include "p2c/data.hpp"
#include "p2c/networks.hpp"
#include "p2c/noisemix.hpp"
#include "p2c/ops.hpp"
#include "test_support.hpp"

using namespace p2c;

TEST_CASE("alpha=1 is the identity, alpha=0 is the pure field") {
  Rng rng(3);
  Tensor4 x = testsup::random_tensor({1, 3, 6, 6}, rng, 0.0, 255.0);
  Tensor4 n = noise_field(x.shape(), 99);
  CHECK(mix_noise_with(x, 1.0, n).data() == x.data());
  CHECK(mix_noise_with(x, 0.0, n).data() == n.data());
  CHECK(mix_noise(x, NoiseSpec{1.0, 42}).data() == x.data());
}

TEST_CASE("blend value oracle and convexity") {
  Tensor4 x = Tensor4::full({1, 1, 1, 1}, 100.0);
  Tensor4 n = Tensor4::full({1, 1, 1, 1}, 200.0);
  CHECK(mix_noise_with(x, 0.5, n).item() == 150.0);

  Rng rng(5);
  Tensor4 img = testsup::random_tensor({1, 3, 5, 5}, rng, 0.0, 255.0);
  Tensor4 field = noise_field(img.shape(), 7);
  for (double a : {0.25, 0.5, 0.9}) {
    Tensor4 out = mix_noise_with(img, a, field);
    for (std::size_t i = 0; i < out.data().size(); ++i) {
      const double lo = std::min(img.data()[i], field.data()[i]);
      const double hi = std::max(img.data()[i], field.data()[i]);
      CHECK(out.data()[i] >= lo - 1e-12);
      CHECK(out.data()[i] <= hi + 1e-12);
    }
  }

  // the blend rule is exactly x*a + (1-a)*n
  Tensor4 out = mix_noise_with(img, 0.37, field);
  for (std::size_t i = 0; i < out.data().size(); ++i)
    CHECK(out.data()[i] == img.data()[i] * 0.37 + (1.0 - 0.37) * field.data()[i]);
}

TEST_CASE("noise fields are a pure function of (shape, seed)") {
  Shape4 s{1, 3, 4, 4};
  CHECK(noise_field(s, 11).data() == noise_field(s, 11).data());
  CHECK(noise_field(s, 11).data() != noise_field(s, 12).data());
  Tensor4 field = noise_field(s, 11);
  for (double v : field.data()) {
    CHECK(v >= 0.0);
    CHECK(v < 255.0);
  }
}

TEST_CASE("Monte-Carlo mean of the blend matches alpha*x + (1-alpha)*127.5") {
  const double alpha = 0.6;
  const int trials = 2000;
  Rng rng(13);
  Tensor4 x = testsup::random_tensor({1, 3, 4, 4}, rng, 0.0, 255.0);
  std::vector<double> sum(x.numel(), 0.0);
  for (int t = 0; t < trials; ++t) {
    Tensor4 out = mix_noise_with(x, alpha, noise_field(x.shape(), mix_seed(0xA11CE, t)));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += out.data()[i];
  }
  // per-pixel: stddev of one draw is (1-alpha)*255/sqrt(12)
  const double sd = (1.0 - alpha) * 255.0 / std::sqrt(12.0) / std::sqrt(double(trials));
  double agg_err = 0.0;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = sum[i] / trials;
    const double expect = alpha * x.data()[i] + (1.0 - alpha) * 127.5;
    CHECK(std::fabs(mean - expect) <= 3.0 * sd);
    agg_err += mean - expect;
  }
  // aggregate mean over all pixels tightens by sqrt(numel)
  agg_err /= double(x.numel());
  CHECK(std::fabs(agg_err) <= 3.0 * sd / std::sqrt(double(x.numel())));
}

TEST_CASE("alpha sweep reuses one field and matches plain translation at 1.0") {
  Generator g(GeneratorConfig{3, 3, 8, 1}, 77);
  Rng rng(17);
  Tensor4 raw = testsup::random_tensor({1, 3, 16, 16}, rng, 0.0, 255.0);

  std::vector<Tensor4> at_one = alpha_sweep(g, raw, {1.0}, 5);
  REQUIRE(at_one.size() == 1);
  NoGradGuard ng;
  Tensor4 direct = g(normalize_to_unit(raw));
  CHECK(at_one[0].data() == direct.data());

  std::vector<Tensor4> pair = alpha_sweep(g, raw, {0.5, 0.5}, 5);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].data() == pair[1].data());

  // same seed reproduces the sweep; different alphas give distinct outputs
  std::vector<Tensor4> a = alpha_sweep(g, raw, {1.0, 0.7, 0.4}, 9);
  std::vector<Tensor4> b = alpha_sweep(g, raw, {1.0, 0.7, 0.4}, 9);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data() == b[i].data());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      CHECK(l1_mean(a[i], a[j]).item() > 0.0);
}

TEST_CASE("invalid blends are rejected") {
  Tensor4 x = Tensor4::full({1, 1, 2, 2}, 10.0);
  Tensor4 n = noise_field(x.shape(), 1);
  CHECK_THROWS_AS(mix_noise_with(x, 1.5, n), Error);
  CHECK_THROWS_AS(mix_noise_with(x, -0.1, n), Error);
  CHECK_THROWS_AS(mix_noise_with(x, 0.5, noise_field({1, 1, 3, 3}, 1)), Error);
  try {
    mix_noise_with(x, 2.0, n);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.category() == "config");
  }

  Generator unbuilt;
  CHECK_THROWS_AS(alpha_sweep(unbuilt, x, {1.0}, 1), Error);
  Generator g(GeneratorConfig{3, 3, 8, 1}, 1);
  CHECK_THROWS_AS(alpha_sweep(g, x, {}, 1), Error);
}
