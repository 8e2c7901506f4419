#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "p2c/common.hpp"
#include "p2c/networks.hpp"
#include "p2c/ops.hpp"
#include "test_support.hpp"

using namespace p2c;
namespace fs = std::filesystem;

namespace {

// rf += (k-1)*jump, jump *= s, layer by layer from the input.
int receptive_field(const std::vector<ConvSpec>& specs) {
  int rf = 1, jump = 1;
  for (const ConvSpec& s : specs) {
    rf += (s.kernel - 1) * jump;
    jump *= s.stride;
  }
  return rf;
}

}  // namespace

TEST_CASE("generator preserves shape and bounds output") {
  GeneratorConfig cfg{3, 3, 8, 2};
  Generator g(cfg, 21);
  Rng rng(4);
  Tensor4 x = testsup::random_tensor({2, 3, 16, 16}, rng, -1.0, 1.0);
  NoGradGuard ng;
  Tensor4 y = g(x);
  CHECK(y.shape() == Shape4{2, 3, 16, 16});
  for (double v : y.data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("generator builds are a pure function of (config, seed)") {
  GeneratorConfig cfg{3, 3, 8, 1};
  Generator a(cfg, 33), b(cfg, 33), c(cfg, 34);
  CHECK(testsup::params_bitwise_equal(a.named_parameters(), b.named_parameters()));
  CHECK(!testsup::params_bitwise_equal(a.named_parameters(), c.named_parameters()));

  Rng rng(6);
  Tensor4 x = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
  NoGradGuard ng;
  CHECK(a(x).data() == b(x).data());
  CHECK(a(x).data() == a(x).data());
}

TEST_CASE("generator parameter count matches the layer-by-layer sum") {
  // base 8, 1 block: 1176+16 + 1152+32 + 4608+64 + (2*9216+2*64)
  //                  + 8192+32 + 2048+16 + 1176+3 = 37075
  CHECK(Generator(GeneratorConfig{3, 3, 8, 1}, 1).parameter_count() == 37075);
  // base 64, 6 blocks (the 64x64 default depth)
  CHECK(GeneratorConfig::for_resolution(64).residual_blocks == 6);
  CHECK(GeneratorConfig::for_resolution(256).residual_blocks == 9);
  CHECK(Generator(GeneratorConfig{3, 3, 64, 6}, 1).parameter_count() == 8128131);
}

TEST_CASE("generator rejects invalid inputs") {
  Generator g(GeneratorConfig{3, 3, 8, 1}, 2);
  CHECK_THROWS_AS(g(Tensor4::zeros({1, 4, 16, 16})), Error);
  CHECK_THROWS_AS(g(Tensor4::zeros({1, 3, 10, 10})), Error);
  CHECK_THROWS_AS(Generator(GeneratorConfig{3, 3, 8, 0}, 2), Error);
  CHECK_THROWS_AS(Generator(GeneratorConfig{3, 3, 4, 1}, 2), Error);
}

TEST_CASE("discriminators emit the stated patch grids") {
  Rng rng(8);
  Tensor4 img = testsup::random_tensor({2, 3, 256, 256}, rng, -1.0, 1.0);
  NoGradGuard ng;

  PatchDiscriminator fine(DiscriminatorKind::fine(16), 256, 5, 8);
  Tensor4 f = fine(img);
  CHECK(f.shape() == Shape4{2, 1, 16, 16});

  PatchDiscriminator coarse(DiscriminatorKind::coarse(4), 256, 5, 8);
  Tensor4 c = coarse(img);
  CHECK(c.shape() == Shape4{2, 1, 4, 4});

  for (double v : f.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  for (double v : c.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("discriminator forward is deterministic") {
  Rng rng(9);
  Tensor4 img = testsup::random_tensor({1, 3, 32, 32}, rng, -1.0, 1.0);
  NoGradGuard ng;
  PatchDiscriminator a(DiscriminatorKind::fine(8), 32, 17, 8);
  PatchDiscriminator b(DiscriminatorKind::fine(8), 32, 17, 8);
  CHECK(testsup::params_bitwise_equal(a.named_parameters(), b.named_parameters()));
  CHECK(a(img).data() == b(img).data());
}

TEST_CASE("receptive fields: coarse cells see more than fine cells") {
  PatchDiscriminator fine(DiscriminatorKind::fine(16), 256, 1, 8);
  PatchDiscriminator coarse(DiscriminatorKind::coarse(4), 256, 1, 8);
  const int rf_fine = receptive_field(fine.layer_specs());
  const int rf_coarse = receptive_field(coarse.layer_specs());
  CHECK(rf_fine == 78);
  CHECK(rf_coarse == 318);
  CHECK(rf_coarse > rf_fine);
}

TEST_CASE("discriminator rejects bad geometry") {
  // grid does not divide the resolution
  CHECK_THROWS_AS(PatchDiscriminator(DiscriminatorKind::coarse(5), 16, 1, 8), Error);
  // ratio not a power of two
  CHECK_THROWS_AS(PatchDiscriminator(DiscriminatorKind::fine(16), 48, 1, 8), Error);
  // grid too large for the resolution
  CHECK_THROWS_AS(PatchDiscriminator(DiscriminatorKind::fine(16), 16, 1, 8), Error);
  // wrong input resolution at forward time
  PatchDiscriminator d(DiscriminatorKind::fine(8), 32, 1, 8);
  CHECK_THROWS_AS(d(Tensor4::zeros({1, 3, 64, 64})), Error);
}

TEST_CASE("perception net tap structure") {
  PerceptionNet phi(PerceptionConfig{4, 3}, 19);
  CHECK(phi.taps() == 3);
  Rng rng(10);
  Tensor4 img = testsup::random_tensor({1, 3, 16, 16}, rng, -1.0, 1.0);
  NoGradGuard ng;
  std::vector<Tensor4> feats = phi.features(img);
  REQUIRE(feats.size() == 3);
  CHECK(feats[0].shape().h == 8);
  CHECK(feats[1].shape().h == 4);
  CHECK(feats[2].shape().h == 2);
  for (std::size_t i = 1; i < feats.size(); ++i)
    CHECK(feats[i].shape().h < feats[i - 1].shape().h);
}

TEST_CASE("frozen_random perception is deterministic and frozen") {
  PerceptionNet a = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  PerceptionNet b = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  CHECK(testsup::params_bitwise_equal(a.named_parameters(), b.named_parameters()));
  for (const auto& [name, t] : a.named_parameters()) CHECK(!t.requires_grad());

  PerceptionNet c = build_perception_net(PerceptionSource::frozen_random(8, {4, 3}));
  CHECK(!testsup::params_bitwise_equal(a.named_parameters(), c.named_parameters()));
}

TEST_CASE("perception gradients reach the image, never the net") {
  PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  Rng rng(12);
  Tensor4 img = testsup::random_tensor({1, 3, 16, 16}, rng, -0.5, 0.5, true);
  std::vector<Tensor4> feats = phi.features(img);
  backward(l1_mean(feats.back(), Tensor4::zeros(feats.back().shape())));
  CHECK(img.grad().size() == img.numel());
  for (const auto& [name, t] : phi.named_parameters()) CHECK(t.get()->grad.empty());
}

TEST_CASE("one hot pixel separates features at every tap") {
  PerceptionNet phi = build_perception_net(PerceptionSource::frozen_random(7, {4, 3}));
  Tensor4 zero = Tensor4::zeros({1, 3, 16, 16});
  Tensor4 hot = Tensor4::zeros({1, 3, 16, 16});
  hot.at(0, 1, 5, 5) = 1.0;
  NoGradGuard ng;
  std::vector<Tensor4> fz = phi.features(zero);
  std::vector<Tensor4> fh = phi.features(hot);
  REQUIRE(fz.size() == fh.size());
  for (std::size_t i = 0; i < fz.size(); ++i)
    CHECK(testsup::max_abs_diff(fz[i], fh[i]) > 0.0);
}

TEST_CASE("perception weight file round-trips") {
  fs::path dir = testsup::fresh_dir("pnet");
  fs::path file = dir / "phi.pnet";
  PerceptionNet phi(PerceptionConfig{4, 3}, 23);
  phi.save(file);

  std::string bytes = testsup::read_file(file);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.substr(0, 4) == "PNET");

  PerceptionNet loaded = PerceptionNet::load(file);
  CHECK(loaded.taps() == phi.taps());
  CHECK(testsup::params_bitwise_equal(loaded.named_parameters(), phi.named_parameters()));
  for (const auto& [name, t] : loaded.named_parameters()) CHECK(!t.requires_grad());

  // via the source enum as well
  PerceptionNet via = build_perception_net(PerceptionSource::from_file(file));
  CHECK(testsup::params_bitwise_equal(via.named_parameters(), phi.named_parameters()));
}

TEST_CASE("perception weight file rejects truncation and bad magic") {
  fs::path dir = testsup::fresh_dir("pnet_bad");
  fs::path file = dir / "phi.pnet";
  PerceptionNet phi(PerceptionConfig{4, 2}, 29);
  phi.save(file);

  std::string bytes = testsup::read_file(file);
  testsup::write_file(dir / "short.pnet", bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(PerceptionNet::load(dir / "short.pnet"), Error);

  std::string garbled = bytes;
  garbled[0] = 'X';
  testsup::write_file(dir / "magic.pnet", garbled);
  try {
    PerceptionNet::load(dir / "magic.pnet");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.category() == "io");
  }

  CHECK_THROWS_AS(PerceptionNet::load(dir / "absent.pnet"), Error);
}

TEST_CASE("desk-trained perception is deterministic") {
  fs::path root = testsup::make_dataset("desk_phi", 6, 6, 2, 2, 16);
  PerceptionSource src =
      PerceptionSource::desk_trained(root, 5, /*steps=*/3, /*resolution=*/16, {4, 3});
  PerceptionNet a = build_perception_net(src);
  PerceptionNet b = build_perception_net(src);
  CHECK(testsup::params_bitwise_equal(a.named_parameters(), b.named_parameters()));
  for (const auto& [name, t] : a.named_parameters()) CHECK(!t.requires_grad());

  // training actually moved the trunk away from its random init
  PerceptionNet init(PerceptionConfig{4, 3}, mix_seed(5, 0x9e70));
  bool moved = false;
  auto pa = a.named_parameters();
  auto pi = init.named_parameters();
  REQUIRE(pa.size() == pi.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].second.data() != pi[i].second.data()) moved = true;
  CHECK(moved);
}
