#include "p2c/networks.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "p2c/data.hpp"
#include "p2c/optim.hpp"

namespace p2c {

namespace {

Tensor4 gaussian_weights(Shape4 shape, Rng& rng, double stddev = 0.02) {
  std::vector<double> w(shape.numel());
  for (double& v : w) v = rng.normal(0.0, stddev);
  return Tensor4::from_data(shape, std::move(w), true);
}

}  // namespace

Conv2d make_conv2d(int in, int out, int k, int s, int p, bool bias, Rng& rng) {
  Conv2d c;
  c.spec = ConvSpec{in, out, k, s, p};
  c.w = gaussian_weights({out, in, k, k}, rng);
  if (bias) c.b = Tensor4::zeros({1, out, 1, 1}, true);
  return c;
}

Deconv2d make_deconv2d(int in, int out, int k, int s, int p, bool bias, Rng& rng) {
  Deconv2d c;
  c.spec = ConvSpec{in, out, k, s, p};
  c.w = gaussian_weights({in, out, k, k}, rng);
  if (bias) c.b = Tensor4::zeros({1, out, 1, 1}, true);
  return c;
}

Norm make_norm(int channels) {
  Norm n;
  n.scale = Tensor4::full({1, channels, 1, 1}, 1.0, true);
  n.shift = Tensor4::zeros({1, channels, 1, 1}, true);
  return n;
}

GeneratorConfig GeneratorConfig::for_resolution(int resolution, int base_channels) {
  GeneratorConfig cfg;
  cfg.base_channels = base_channels;
  cfg.residual_blocks = resolution >= 128 ? 9 : 6;
  return cfg;
}

Generator::Generator(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg) {
  check(cfg.residual_blocks >= 1, "config", "generator needs at least one residual block");
  check(cfg.base_channels >= 8, "config", "generator base_channels must be >= 8");
  Rng rng(seed);
  const int b = cfg.base_channels;
  stem_ = make_conv2d(cfg.in_channels, b, 7, 1, 3, false, rng);
  stem_n_ = make_norm(b);
  down1_ = make_conv2d(b, 2 * b, 3, 2, 1, false, rng);
  down1_n_ = make_norm(2 * b);
  down2_ = make_conv2d(2 * b, 4 * b, 3, 2, 1, false, rng);
  down2_n_ = make_norm(4 * b);
  blocks_.reserve(cfg.residual_blocks);
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    ResBlock blk;
    blk.c1 = make_conv2d(4 * b, 4 * b, 3, 1, 1, false, rng);
    blk.n1 = make_norm(4 * b);
    blk.c2 = make_conv2d(4 * b, 4 * b, 3, 1, 1, false, rng);
    blk.n2 = make_norm(4 * b);
    blocks_.push_back(std::move(blk));
  }
  // kernel 4 at stride 2 doubles the spatial size exactly
  up1_ = make_deconv2d(4 * b, 2 * b, 4, 2, 1, false, rng);
  up1_n_ = make_norm(2 * b);
  up2_ = make_deconv2d(2 * b, b, 4, 2, 1, false, rng);
  up2_n_ = make_norm(b);
  head_ = make_conv2d(b, cfg.out_channels, 7, 1, 3, true, rng);
}

Tensor4 Generator::operator()(const Tensor4& x) const {
  check(x.defined(), "shape", "generator input undefined");
  const Shape4& s = x.shape();
  check(s.c == cfg_.in_channels, "shape",
        "generator input " + s.str() + " must have " + std::to_string(cfg_.in_channels) +
            " channels");
  check(s.h % 4 == 0 && s.w % 4 == 0, "shape",
        "generator input " + s.str() + " spatial size must be divisible by 4");
  Tensor4 h = relu(stem_n_(stem_(x)));
  h = relu(down1_n_(down1_(h)));
  h = relu(down2_n_(down2_(h)));
  for (const ResBlock& blk : blocks_) {
    Tensor4 t = relu(blk.n1(blk.c1(h)));
    t = blk.n2(blk.c2(t));
    h = add(h, t);
  }
  h = relu(up1_n_(up1_(h)));
  h = relu(up2_n_(up2_(h)));
  return tanh(head_(h));
}

namespace {

void push_conv(NamedParams& out, const std::string& name, const Conv2d& c) {
  out.emplace_back(name + ".w", c.w);
  if (c.b.defined()) out.emplace_back(name + ".b", c.b);
}

void push_deconv(NamedParams& out, const std::string& name, const Deconv2d& c) {
  out.emplace_back(name + ".w", c.w);
  if (c.b.defined()) out.emplace_back(name + ".b", c.b);
}

void push_norm(NamedParams& out, const std::string& name, const Norm& n) {
  out.emplace_back(name + ".scale", n.scale);
  out.emplace_back(name + ".shift", n.shift);
}

std::size_t count_params(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.numel();
  return n;
}

}  // namespace

NamedParams Generator::named_parameters() const {
  NamedParams out;
  push_conv(out, "stem", stem_);
  push_norm(out, "stem_n", stem_n_);
  push_conv(out, "down1", down1_);
  push_norm(out, "down1_n", down1_n_);
  push_conv(out, "down2", down2_);
  push_norm(out, "down2_n", down2_n_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "res" + std::to_string(i + 1);
    push_conv(out, p + ".c1", blocks_[i].c1);
    push_norm(out, p + ".n1", blocks_[i].n1);
    push_conv(out, p + ".c2", blocks_[i].c2);
    push_norm(out, p + ".n2", blocks_[i].n2);
  }
  push_deconv(out, "up1", up1_);
  push_norm(out, "up1_n", up1_n_);
  push_deconv(out, "up2", up2_);
  push_norm(out, "up2_n", up2_n_);
  push_conv(out, "head", head_);
  return out;
}

std::size_t Generator::parameter_count() const { return count_params(named_parameters()); }

PatchDiscriminator::PatchDiscriminator(DiscriminatorKind kind, int resolution, uint64_t seed,
                                       int base_channels)
    : kind_(kind), resolution_(resolution) {
  const int g = kind.patch_grid;
  check(g >= 1 && resolution >= 2 * g, "config",
        "patch grid " + std::to_string(g) + " too large for resolution " +
            std::to_string(resolution));
  int ratio = resolution / g;
  check(ratio * g == resolution && (ratio & (ratio - 1)) == 0, "config",
        "resolution " + std::to_string(resolution) + " not reducible to patch grid " +
            std::to_string(g) + " by stride-2 stages");
  int stages = 0;
  while ((1 << stages) < ratio) ++stages;

  Rng rng(seed);
  int in_ch = 3;
  for (int i = 0; i < stages; ++i) {
    int out_ch = std::min(base_channels << i, base_channels * 8);
    convs_.push_back(make_conv2d(in_ch, out_ch, 4, 2, 1, i == 0, rng));
    if (i > 0) norms_.push_back(make_norm(out_ch));
    in_ch = out_ch;
  }
  head_ = make_conv2d(in_ch, 1, 3, 1, 1, true, rng);
}

Tensor4 PatchDiscriminator::operator()(const Tensor4& img) const {
  check(img.defined(), "shape", "discriminator input undefined");
  const Shape4& s = img.shape();
  check(s.c == 3 && s.h == resolution_ && s.w == resolution_, "shape",
        "discriminator built for (n,3," + std::to_string(resolution_) + "," +
            std::to_string(resolution_) + "), got " + s.str());
  Tensor4 h = img;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    if (i > 0) h = norms_[i - 1](h);
    h = leaky_relu(h, 0.2);
  }
  return sigmoid(head_(h));
}

std::vector<ConvSpec> PatchDiscriminator::layer_specs() const {
  std::vector<ConvSpec> specs;
  for (const Conv2d& c : convs_) specs.push_back(c.spec);
  specs.push_back(head_.spec);
  return specs;
}

NamedParams PatchDiscriminator::named_parameters() const {
  NamedParams out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    push_conv(out, "conv" + std::to_string(i), convs_[i]);
    if (i > 0) push_norm(out, "norm" + std::to_string(i), norms_[i - 1]);
  }
  push_conv(out, "head", head_);
  return out;
}

std::size_t PatchDiscriminator::parameter_count() const {
  return count_params(named_parameters());
}

PerceptionSource PerceptionSource::frozen_random(uint64_t seed, PerceptionConfig cfg) {
  PerceptionSource s;
  s.kind = Kind::frozen_random;
  s.seed = seed;
  s.config = cfg;
  return s;
}

PerceptionSource PerceptionSource::desk_trained(std::filesystem::path dataset_root, uint64_t seed,
                                                int steps, int resolution, PerceptionConfig cfg) {
  PerceptionSource s;
  s.kind = Kind::desk_trained;
  s.path = std::move(dataset_root);
  s.seed = seed;
  s.steps = steps;
  s.resolution = resolution;
  s.config = cfg;
  return s;
}

PerceptionSource PerceptionSource::from_file(std::filesystem::path path) {
  PerceptionSource s;
  s.kind = Kind::file;
  s.path = std::move(path);
  return s;
}

PerceptionNet::PerceptionNet(const PerceptionConfig& cfg, uint64_t seed) {
  check(cfg.layers >= 2, "config", "perception net needs at least 2 tap points");
  check(cfg.base_channels >= 1, "config", "perception base_channels must be positive");
  Rng rng(seed);
  int in_ch = 3;
  for (int i = 0; i < cfg.layers; ++i) {
    int out_ch = cfg.base_channels << std::min(i, 3);
    convs_.push_back(make_conv2d(in_ch, out_ch, 3, 2, 1, true, rng));
    tap_.push_back(true);
    in_ch = out_ch;
  }
}

std::vector<Tensor4> PerceptionNet::features(const Tensor4& img) const {
  check(!convs_.empty(), "usage", "perception net is empty");
  std::vector<Tensor4> taps;
  Tensor4 h = img;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = relu(convs_[i](h));
    if (tap_[i]) taps.push_back(h);
  }
  return taps;
}

int PerceptionNet::taps() const {
  int n = 0;
  for (bool t : tap_) n += t ? 1 : 0;
  return n;
}

NamedParams PerceptionNet::named_parameters() const {
  NamedParams out;
  for (std::size_t i = 0; i < convs_.size(); ++i)
    push_conv(out, "layer" + std::to_string(i), convs_[i]);
  return out;
}

void PerceptionNet::freeze() {
  for (Conv2d& c : convs_) {
    c.w.set_requires_grad(false);
    if (c.b.defined()) c.b.set_requires_grad(false);
  }
}

namespace {

// Perception weight file: "PNET", version u32, layer count u32; per layer
// in/out/kernel/stride/padding/is_tap as u32, then row-major 64-bit-float
// weight and bias blobs.
constexpr uint32_t kPnetVersion = 1;

void write_u32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::ifstream& is, const std::string& where) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  check(bool(is), "io", "truncated perception weight file at " + where);
  return v;
}

void read_f64s(std::ifstream& is, double* out, std::size_t n, const std::string& where) {
  is.read(reinterpret_cast<char*>(out), std::streamsize(n * sizeof(double)));
  check(bool(is), "io", "truncated perception weight file at " + where);
}

}  // namespace

void PerceptionNet::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  check(bool(os), "io", "cannot write perception weight file " + path.string());
  os.write("PNET", 4);
  write_u32(os, kPnetVersion);
  write_u32(os, uint32_t(convs_.size()));
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const Conv2d& c = convs_[i];
    write_u32(os, uint32_t(c.spec.in_channels));
    write_u32(os, uint32_t(c.spec.out_channels));
    write_u32(os, uint32_t(c.spec.kernel));
    write_u32(os, uint32_t(c.spec.stride));
    write_u32(os, uint32_t(c.spec.padding));
    write_u32(os, tap_[i] ? 1 : 0);
    os.write(reinterpret_cast<const char*>(c.w.data().data()),
             std::streamsize(c.w.numel() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(c.b.data().data()),
             std::streamsize(c.b.numel() * sizeof(double)));
  }
  check(bool(os), "io", "write failed for perception weight file " + path.string());
}

PerceptionNet PerceptionNet::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  check(bool(is), "io", "cannot open perception weight file " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  check(bool(is) && std::string(magic, 4) == "PNET", "io",
        path.string() + " is not a perception weight file (bad magic)");
  uint32_t version = read_u32(is, "header");
  check(version == kPnetVersion, "io",
        "unsupported perception weight file version " + std::to_string(version));
  uint32_t count = read_u32(is, "header");
  check(count >= 2 && count <= 64, "io",
        "implausible perception layer count " + std::to_string(count));

  PerceptionNet net;
  int expect_in = 3;
  for (uint32_t i = 0; i < count; ++i) {
    const std::string where = "layer " + std::to_string(i);
    ConvSpec spec;
    spec.in_channels = int(read_u32(is, where));
    spec.out_channels = int(read_u32(is, where));
    spec.kernel = int(read_u32(is, where));
    spec.stride = int(read_u32(is, where));
    spec.padding = int(read_u32(is, where));
    uint32_t is_tap = read_u32(is, where);
    check(spec.in_channels >= 1 && spec.in_channels <= 4096 && spec.out_channels >= 1 &&
              spec.out_channels <= 4096 && spec.kernel >= 1 && spec.kernel <= 15 &&
              spec.stride >= 1 && spec.stride <= 8 && spec.padding >= 0 && spec.padding <= 7,
          "io", "implausible layer spec in perception weight file at " + where);
    check(spec.in_channels == expect_in, "io",
          "channel chain broken in perception weight file at " + where);
    expect_in = spec.out_channels;

    Conv2d c;
    c.spec = spec;
    std::vector<double> w(std::size_t(spec.out_channels) * spec.in_channels * spec.kernel *
                          spec.kernel);
    read_f64s(is, w.data(), w.size(), where + " weights");
    c.w = Tensor4::from_data({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
                             std::move(w));
    std::vector<double> b(std::size_t(spec.out_channels));
    read_f64s(is, b.data(), b.size(), where + " bias");
    c.b = Tensor4::from_data({1, spec.out_channels, 1, 1}, std::move(b));
    net.convs_.push_back(std::move(c));
    net.tap_.push_back(is_tap != 0);
  }
  check(net.taps() >= 2, "io", "perception weight file has fewer than 2 tap points");
  return net;
}

DeskClassifier train_desk_classifier(const Dataset& ds, const PerceptionConfig& cfg,
                                     uint64_t seed, int steps, int resolution) {
  check(steps >= 1, "config", "desk training needs at least one step");
  const int res = resolution;
  // tiny two-class corpus: domain A vs domain B
  std::vector<Tensor4> images_a, images_b;
  for (const auto& rec : ds.train_a.records)
    images_a.push_back(normalize_to_unit(load_image_raw(rec.path, res)));
  for (const auto& rec : ds.train_b.records)
    images_b.push_back(normalize_to_unit(load_image_raw(rec.path, res)));

  DeskClassifier clf;
  clf.resolution = res;
  clf.trunk = PerceptionNet(cfg, mix_seed(seed, 0x9e70));
  Rng head_rng(mix_seed(seed, 0x9e71));
  const int last_ch = clf.trunk.layers().back().spec.out_channels;
  clf.head = make_conv2d(last_ch, 2, 1, 1, 0, true, head_rng);

  std::vector<Tensor4> params;
  for (auto& [name, t] : clf.trunk.named_parameters()) params.push_back(t);
  params.push_back(clf.head.w);
  params.push_back(clf.head.b);
  Adam opt(params, 1e-3, 0.9, 0.999);

  const int half = 4;
  for (int step = 0; step < steps; ++step) {
    Rng rng(mix_seed(seed, uint64_t(step), 0x9e72));
    Shape4 bs{2 * half, 3, res, res};
    std::vector<double> batch(bs.numel());
    std::vector<int> labels(2 * half);
    for (int i = 0; i < 2 * half; ++i) {
      const std::vector<Tensor4>& pool = i < half ? images_a : images_b;
      labels[i] = i < half ? 0 : 1;
      const Tensor4& img = pool[rng.index(pool.size())];
      std::copy(img.data().begin(), img.data().end(),
                batch.begin() + std::ptrdiff_t(i) * 3 * res * res);
    }
    Tensor4 x = Tensor4::from_data(bs, std::move(batch));
    Tensor4 last = clf.trunk.features(x).back();
    Tensor4 loss = softmax_cross_entropy(mean_spatial(clf.head(last)), labels);
    backward(loss);
    opt.step();
  }
  return clf;
}

PerceptionNet build_perception_net(const PerceptionSource& source) {
  switch (source.kind) {
    case PerceptionSource::Kind::frozen_random: {
      PerceptionNet net(source.config, source.seed);
      net.freeze();
      return net;
    }
    case PerceptionSource::Kind::desk_trained: {
      Dataset ds = load_dataset(source.path);
      DeskClassifier clf = train_desk_classifier(ds, source.config, source.seed,
                                                 source.steps, source.resolution);
      clf.trunk.freeze();
      return clf.trunk;
    }
    case PerceptionSource::Kind::file: {
      PerceptionNet net = PerceptionNet::load(source.path);
      net.freeze();
      return net;
    }
  }
  fail("usage", "unknown perception source");
}

}  // namespace p2c
