#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "p2c/data.hpp"
#include "p2c/ops.hpp"
#include "p2c/rng.hpp"
#include "p2c/tensor.hpp"

namespace p2c {

using NamedParams = std::vector<std::pair<std::string, Tensor4>>;

// Layer building blocks. Weights initialized from Gaussian(0, 0.02), biases
// zero, norm affine at (1, 0). Convs that feed an instance norm carry no
// bias: the norm's shift makes a bias both redundant and gradient-free.
struct Conv2d {
  ConvSpec spec;
  Tensor4 w, b;  // b undefined when the layer has no bias
  Tensor4 operator()(const Tensor4& x) const { return conv2d(x, w, b, spec); }
};

struct Deconv2d {
  ConvSpec spec;
  Tensor4 w, b;
  Tensor4 operator()(const Tensor4& x) const { return conv_transpose2d(x, w, b, spec); }
};

struct Norm {
  Tensor4 scale, shift;
  Tensor4 operator()(const Tensor4& x) const { return instance_norm2d(x, scale, shift); }
};

struct ResBlock {
  Conv2d c1, c2;
  Norm n1, n2;
};

Conv2d make_conv2d(int in, int out, int k, int s, int p, bool bias, Rng& rng);
Deconv2d make_deconv2d(int in, int out, int k, int s, int p, bool bias, Rng& rng);
Norm make_norm(int channels);

struct GeneratorConfig {
  int in_channels = 3;
  int out_channels = 3;
  int base_channels = 64;
  int residual_blocks = 9;

  // 9 residual blocks at 128 and up, 6 below.
  static GeneratorConfig for_resolution(int resolution, int base_channels = 64);
};

// Stem conv, two stride-2 down convs, residual blocks, two stride-2
// transposed convs, output conv with tanh head. Spatial shape preserving for
// inputs divisible by 4.
class Generator {
public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, uint64_t seed);

  Tensor4 operator()(const Tensor4& x) const;
  const GeneratorConfig& config() const { return cfg_; }
  NamedParams named_parameters() const;
  std::size_t parameter_count() const;
  bool defined() const { return head_.w.defined(); }

private:
  GeneratorConfig cfg_;
  Conv2d stem_, down1_, down2_;
  Norm stem_n_, down1_n_, down2_n_;
  std::vector<ResBlock> blocks_;
  Deconv2d up1_, up2_;
  Norm up1_n_, up2_n_;
  Conv2d head_;
};

enum class DiscRole { coarse, fine };

struct DiscriminatorKind {
  DiscRole role = DiscRole::fine;
  int patch_grid = 16;

  static DiscriminatorKind coarse(int grid = 4) { return {DiscRole::coarse, grid}; }
  static DiscriminatorKind fine(int grid = 16) { return {DiscRole::fine, grid}; }
};

// Whole-image patch discriminator: a ladder of stride-2 convs (leaky relu,
// instance norm on all but the first) taking resolution down to the patch
// grid, then a 1-channel conv with sigmoid. Output is (n,1,g,g), elementwise
// strictly inside (0,1).
class PatchDiscriminator {
public:
  PatchDiscriminator() = default;
  PatchDiscriminator(DiscriminatorKind kind, int resolution, uint64_t seed,
                     int base_channels = 64);

  Tensor4 operator()(const Tensor4& img) const;
  const DiscriminatorKind& kind() const { return kind_; }
  int resolution() const { return resolution_; }
  int patch_grid() const { return kind_.patch_grid; }
  // Ladder and head specs in forward order, for receptive-field arithmetic.
  std::vector<ConvSpec> layer_specs() const;
  NamedParams named_parameters() const;
  std::size_t parameter_count() const;
  bool defined() const { return head_.w.defined(); }

private:
  DiscriminatorKind kind_;
  int resolution_ = 0;
  std::vector<Conv2d> convs_;
  std::vector<Norm> norms_;  // norms_[i] follows convs_[i+1]
  Conv2d head_;
};

struct PerceptionConfig {
  int base_channels = 16;
  int layers = 4;  // stride-2 conv+relu stages, each one a tap point
};

struct PerceptionSource {
  enum class Kind { frozen_random, desk_trained, file };
  Kind kind = Kind::frozen_random;
  uint64_t seed = 7;
  PerceptionConfig config;
  std::filesystem::path path;  // weight file, or dataset root for desk training
  int steps = 200;             // desk training budget
  int resolution = 64;         // desk training input resolution

  static PerceptionSource frozen_random(uint64_t seed, PerceptionConfig cfg = {});
  static PerceptionSource desk_trained(std::filesystem::path dataset_root, uint64_t seed,
                                       int steps = 200, int resolution = 64,
                                       PerceptionConfig cfg = {});
  static PerceptionSource from_file(std::filesystem::path path);
};

// Frozen feature extractor: a chain of stride-2 conv+relu stages, every stage
// a tap point, so tap spatial sizes strictly decrease with depth. Parameters
// never require gradients.
class PerceptionNet {
public:
  PerceptionNet() = default;
  PerceptionNet(const PerceptionConfig& cfg, uint64_t seed);

  // One feature tensor per tap point; gradients flow to img only.
  std::vector<Tensor4> features(const Tensor4& img) const;
  int taps() const;
  const std::vector<Conv2d>& layers() const { return convs_; }
  NamedParams named_parameters() const;
  bool defined() const { return !convs_.empty(); }

  void save(const std::filesystem::path& path) const;
  static PerceptionNet load(const std::filesystem::path& path);

  // Construction keeps gradients on for desk training; freeze before use.
  void freeze();

private:
  std::vector<Conv2d> convs_;
  std::vector<bool> tap_;
};

PerceptionNet build_perception_net(const PerceptionSource& source);

// Trunk plus a 1x1 two-class head, fit on domain A vs B at desk scale. The
// perception builder keeps the trunk; the scorer keeps the whole thing.
struct DeskClassifier {
  PerceptionNet trunk;
  Conv2d head;
  int resolution = 0;
};

DeskClassifier train_desk_classifier(const Dataset& ds, const PerceptionConfig& cfg,
                                     uint64_t seed, int steps, int resolution);

}  // namespace p2c
