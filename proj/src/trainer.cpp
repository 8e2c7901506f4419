#include "p2c/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "p2c/checkpoint.hpp"
#include "p2c/common.hpp"
#include "p2c/config.hpp"
#include "p2c/noisemix.hpp"

namespace p2c {

namespace {

// Stream purposes, mixed with (seed, step) so every step draws fresh values
// and a resumed run replays the exact same ones.
constexpr uint64_t kPurposeAlpha = 0xA1FA;
constexpr uint64_t kPurposeNoiseA = 0x0F00;
constexpr uint64_t kPurposeNoiseB = 0x0F01;
constexpr uint64_t kPurposeCursor = 0xDA7A;

std::vector<Tensor4> handles(const NamedParams& np) {
  std::vector<Tensor4> out;
  out.reserve(np.size());
  for (const auto& [name, t] : np) out.push_back(t);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  check(resolution >= 8 && resolution % 4 == 0, "config",
        "model.resolution must be a multiple of 4, at least 8");
  check(base_channels >= 4, "config", "model.base_channels must be at least 4");
  check(residual_blocks >= 0, "config", "model.residual_blocks must be non-negative (0 = auto)");
  check(batch_size >= 1, "config", "train.batch must be at least 1");
  check(total_steps >= 0, "config", "train.steps must be non-negative");
  check(learning_rate > 0.0, "config", "train.lr must be positive");
  check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "config",
        "optimizer betas must lie in [0,1)");
  check(checkpoint_every >= 1, "config", "train.checkpoint_every must be at least 1");
  check(sample_every >= 0, "config", "train.sample_every must be non-negative (0 = follow checkpoints)");

  check(use_coarse || use_fine, "config", "at least one discriminator must be enabled");
  if (use_coarse) check(coarse_grid >= 1, "config", "model.coarse_grid must be at least 1");
  if (use_fine) check(fine_grid >= 1, "config", "model.fine_grid must be at least 1");
  if (use_coarse && use_fine) {
    check(coarse_grid < fine_grid, "config",
          "model.coarse_grid must be smaller than model.fine_grid");
    check(std::fabs(weights.mix_coarse + weights.mix_fine - 1.0) <= 1e-9, "config",
          "loss.mix_coarse + loss.mix_fine must sum to 1");
  }
  check(weights.mix_coarse >= 0.0 && weights.mix_fine >= 0.0, "config",
        "adversarial mix weights must be non-negative");
  if (use_coarse && !use_fine)
    check(weights.mix_coarse > 0.0, "config",
          "loss.mix_coarse must be positive when the coarse head is the only one");
  if (use_fine && !use_coarse)
    check(weights.mix_fine > 0.0, "config",
          "loss.mix_fine must be positive when the fine head is the only one");

  check(weights.gamma >= 0.0 && weights.sigma >= 0.0, "config",
        "loss.gamma and loss.sigma must be non-negative");
  check(!weights.lambda.empty(), "config", "loss.lambda_n must not be empty");
  for (double l : weights.lambda)
    check(l >= 0.0, "config", "loss.lambda_n entries must be non-negative");

  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  check(in_unit(noise.alpha) && in_unit(noise.alpha_min) && in_unit(noise.alpha_max), "config",
        "noise alphas must lie in [0,1]");
  if (noise.mode == NoiseMode::range)
    check(noise.alpha_min <= noise.alpha_max, "config",
          "noise.alpha_min must not exceed noise.alpha_max");

  if (use_percep) {
    check(perception.config.base_channels >= 1, "config",
          "percep.base_channels must be at least 1");
    check(perception.config.layers >= 2 && perception.config.layers <= 8, "config",
          "percep.layers must give between 2 and 8 tap points");
    check(resolution >= (1 << perception.config.layers), "config",
          "model.resolution too small for percep.layers tap points");
    if (perception.kind == PerceptionSource::Kind::desk_trained) {
      check(perception.steps >= 1, "config", "percep.steps must be at least 1");
      check(perception.resolution >= (1 << perception.config.layers), "config",
            "percep.resolution too small for percep.layers tap points");
    }
  }
}

std::string LossTrace::csv_header() { return "step,dir,adv_g,adv_dc,adv_df,cyc,percep,total\n"; }

std::string LossTrace::csv_rows(const LossReport& r) {
  auto row = [&](const char* dir, const DirectionReport& d) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%ld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, dir,
                  d.adv_g, d.adv_d_coarse, d.adv_d_fine, d.cyc, d.percep, d.total_g);
    return std::string(buf);
  };
  return row("a2b", r.a_to_b) + row("b2a", r.b_to_a);
}

Trainer::Trainer(const TrainConfig& cfg, const Dataset& dataset) : Trainer(cfg, dataset, true) {}

Trainer::Trainer(const TrainConfig& cfg, const Dataset& dataset, bool build_phi)
    : cfg_(cfg), dataset_(&dataset) {
  cfg_.validate();
  check(dataset.train_a.size() > 0 && dataset.train_b.size() > 0, "data",
        "trainer needs non-empty training domains");

  if (cfg_.use_percep && cfg_.perception.kind == PerceptionSource::Kind::desk_trained &&
      cfg_.perception.path.empty())
    cfg_.perception.path = dataset.root;

  GeneratorConfig gc;
  gc.base_channels = cfg_.base_channels;
  gc.residual_blocks = cfg_.resolved_residual_blocks();
  g1_ = Generator(gc, mix_seed(cfg_.seed, 1));
  g2_ = Generator(gc, mix_seed(cfg_.seed, 2));
  if (cfg_.use_coarse) {
    dca_ = PatchDiscriminator(DiscriminatorKind::coarse(cfg_.coarse_grid), cfg_.resolution,
                              mix_seed(cfg_.seed, 3), cfg_.base_channels);
    dcb_ = PatchDiscriminator(DiscriminatorKind::coarse(cfg_.coarse_grid), cfg_.resolution,
                              mix_seed(cfg_.seed, 5), cfg_.base_channels);
  }
  if (cfg_.use_fine) {
    dfa_ = PatchDiscriminator(DiscriminatorKind::fine(cfg_.fine_grid), cfg_.resolution,
                              mix_seed(cfg_.seed, 4), cfg_.base_channels);
    dfb_ = PatchDiscriminator(DiscriminatorKind::fine(cfg_.fine_grid), cfg_.resolution,
                              mix_seed(cfg_.seed, 6), cfg_.base_channels);
  }
  if (cfg_.use_percep) {
    // The placeholder branch gets its weights from a checkpoint right after.
    phi_ = build_phi ? build_perception_net(cfg_.perception)
                     : PerceptionNet(cfg_.perception.config, 0);
    check(cfg_.weights.lambda.size() == std::size_t(phi_.taps()), "config",
          "loss.lambda_n has " + std::to_string(cfg_.weights.lambda.size()) + " entries for " +
              std::to_string(phi_.taps()) + " perception taps");
  }

  const double lr = cfg_.learning_rate;
  opt_g1_ = Adam(handles(g1_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);
  opt_g2_ = Adam(handles(g2_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);
  if (dca_.defined()) opt_dca_ = Adam(handles(dca_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);
  if (dcb_.defined()) opt_dcb_ = Adam(handles(dcb_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);
  if (dfa_.defined()) opt_dfa_ = Adam(handles(dfa_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);
  if (dfb_.defined()) opt_dfb_ = Adam(handles(dfb_.named_parameters()), lr, cfg_.beta1, cfg_.beta2);

  cursor_a_.seed = mix_seed(cfg_.seed, kPurposeCursor);
  cursor_a_.tag = 0;
  cursor_b_.seed = mix_seed(cfg_.seed, kPurposeCursor);
  cursor_b_.tag = 1;

  const std::size_t nprobe = std::min<std::size_t>(4, dataset.train_a.size());
  for (std::size_t i = 0; i < nprobe; ++i)
    probes_.push_back(preprocess(dataset.train_a.records[i].path, cfg_.resolution));
}

RawBatch Trainer::next_batch() {
  return sample_unpaired_raw(dataset_->train_a, dataset_->train_b, cfg_.batch_size,
                             cfg_.resolution, cursor_a_, cursor_b_);
}

void Trainer::set_disc_grads(bool enabled) {
  for (PatchDiscriminator* d : {&dca_, &dfa_, &dcb_, &dfb_}) {
    if (!d->defined()) continue;
    for (auto& [name, t] : d->named_parameters()) t.get()->requires_grad = enabled;
  }
}

LossReport Trainer::train_step() { return train_step(next_batch()); }

LossReport Trainer::train_step(const RawBatch& batch) {
  check(batch.x.defined() && batch.y.defined(), "usage", "train_step: empty batch");
  check(batch.x.shape() == batch.y.shape(), "shape",
        "train_step: domain batches disagree: " + batch.x.shape().str() + " vs " +
            batch.y.shape().str());
  check(batch.x.shape().c == 3 && batch.x.shape().h == cfg_.resolution &&
            batch.x.shape().w == cfg_.resolution,
        "shape", "train_step: batch is " + batch.x.shape().str() + ", config wants (n,3," +
                     std::to_string(cfg_.resolution) + "," + std::to_string(cfg_.resolution) + ")");

  ++step_;
  const uint64_t step_u = uint64_t(step_);

  double alpha = cfg_.noise.alpha;
  if (cfg_.noise.mode == NoiseMode::range) {
    Rng arng(mix_seed(cfg_.seed, step_u, kPurposeAlpha));
    alpha = arng.uniform(cfg_.noise.alpha_min, cfg_.noise.alpha_max);
  }
  // Corrupt in raw [0,255] space, then normalize. The mixed images are the
  // ground truth for every term this step: discriminator reals, cycle
  // targets and the perceptual reference alike.
  Tensor4 x = normalize_to_unit(mix_noise_with(
      batch.x, alpha, noise_field(batch.x.shape(), mix_seed(cfg_.seed, step_u, kPurposeNoiseA))));
  Tensor4 y = normalize_to_unit(mix_noise_with(
      batch.y, alpha, noise_field(batch.y.shape(), mix_seed(cfg_.seed, step_u, kPurposeNoiseB))));

  LossReport rep;
  rep.step = step_;

  Tensor4 yhat = g1_(x);
  Tensor4 xhat = g2_(y);
  Tensor4 yhat_d = yhat.detach();
  Tensor4 xhat_d = xhat.detach();

  // Discriminators first, on detached fakes; the generators then face the
  // freshly updated critics.
  if (cfg_.use_coarse) {
    Tensor4 lb = adversarial_loss_d(dcb_(y), dcb_(yhat_d));
    rep.a_to_b.adv_d_coarse = lb.item();
    backward(lb);
    opt_dcb_.step();
    Tensor4 la = adversarial_loss_d(dca_(x), dca_(xhat_d));
    rep.b_to_a.adv_d_coarse = la.item();
    backward(la);
    opt_dca_.step();
  }
  if (cfg_.use_fine) {
    Tensor4 lb = adversarial_loss_d(dfb_(y), dfb_(yhat_d));
    rep.a_to_b.adv_d_fine = lb.item();
    backward(lb);
    opt_dfb_.step();
    Tensor4 la = adversarial_loss_d(dfa_(x), dfa_(xhat_d));
    rep.b_to_a.adv_d_fine = la.item();
    backward(la);
    opt_dfa_.step();
  }

  // Generator phase: discriminator weights drop out of the tape so the
  // backward pass skips their weight gradients entirely.
  set_disc_grads(false);
  GeneratorTerms t_ab, t_ba;
  if (cfg_.use_coarse) {
    t_ab.adv_coarse = adversarial_loss_g(dcb_(yhat));
    t_ba.adv_coarse = adversarial_loss_g(dca_(xhat));
  }
  if (cfg_.use_fine) {
    t_ab.adv_fine = adversarial_loss_g(dfb_(yhat));
    t_ba.adv_fine = adversarial_loss_g(dfa_(xhat));
  }
  if (cfg_.use_cyc) {
    Tensor4 rec_x = g2_(yhat);
    Tensor4 rec_y = g1_(xhat);
    t_ab.cyc = l1_mean(rec_x, x);
    t_ba.cyc = l1_mean(rec_y, y);
  }
  if (cfg_.use_percep) {
    t_ab.percep = perceptual_loss(phi_, y, yhat, cfg_.weights.lambda);
    if (cfg_.percep_symmetric) t_ba.percep = perceptual_loss(phi_, x, xhat, cfg_.weights.lambda);
  }
  Tensor4 total_ab = total_generator_loss(t_ab, cfg_.weights);
  Tensor4 total_ba = total_generator_loss(t_ba, cfg_.weights);
  Tensor4 total = add(total_ab, total_ba);
  backward(total);
  opt_g1_.step();
  opt_g2_.step();
  set_disc_grads(true);

  const LossWeights& w = cfg_.weights;
  const double mix_sum =
      (cfg_.use_coarse ? w.mix_coarse : 0.0) + (cfg_.use_fine ? w.mix_fine : 0.0);
  auto fill = [&](DirectionReport& r, const GeneratorTerms& t, const Tensor4& total_dir) {
    r.adv_g = 0.0;
    if (t.adv_coarse.defined()) r.adv_g += (w.mix_coarse / mix_sum) * t.adv_coarse.item();
    if (t.adv_fine.defined()) r.adv_g += (w.mix_fine / mix_sum) * t.adv_fine.item();
    r.cyc = t.cyc.defined() ? t.cyc.item() : 0.0;
    r.percep = t.percep.defined() ? t.percep.item() : 0.0;
    r.total_g = total_dir.item();
  };
  fill(rep.a_to_b, t_ab, total_ab);
  fill(rep.b_to_a, t_ba, total_ba);

  trace_.steps.push_back(rep);
  return rep;
}

void Trainer::write_sample_grid(const std::filesystem::path& file) const {
  if (probes_.empty()) return;
  NoGradGuard ng;
  std::vector<Tensor4> tiles;
  for (const Tensor4& x : probes_) {
    Tensor4 yhat = g1_(x);
    Tensor4 rec = g2_(yhat);
    tiles.push_back(x);
    tiles.push_back(yhat);
    tiles.push_back(rec);
  }
  export_labeled_grid(tiles, 3, {"input", "translated", "cycled"}, file);
}

void Trainer::run(const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "checkpoints", ec);
  fs::create_directories(out_dir / "samples", ec);
  check(fs::is_directory(out_dir / "checkpoints") && fs::is_directory(out_dir / "samples"), "io",
        "cannot create run directories under " + out_dir.string());

  const fs::path trace_path = out_dir / "trace.csv";
  // Appending keeps a resumed run's trace identical to an uninterrupted one.
  const bool fresh = !fs::exists(trace_path) || fs::file_size(trace_path, ec) == 0;
  std::ofstream trace(trace_path, std::ios::app);
  check(trace.good(), "io", "cannot open " + trace_path.string());
  if (fresh) trace << LossTrace::csv_header();

  auto numbered = [&](const char* dir, const char* ext, long s) {
    char name[64];
    std::snprintf(name, sizeof name, "step_%06ld.%s", s, ext);
    return out_dir / dir / name;
  };
  fs::path last_ckpt;
  long last_saved = -1;
  auto save_at = [&](long s) {
    last_ckpt = numbered("checkpoints", "dptc", s);
    save_checkpoint(last_ckpt);
    last_saved = s;
  };

  const long sample_every = cfg_.resolved_sample_every();
  while (step_ < cfg_.total_steps) {
    LossReport rep;
    try {
      rep = train_step();
    } catch (const Error& e) {
      trace.flush();
      if (e.category() != "numeric") throw;
      std::string msg = e.what();
      const std::string prefix = e.category() + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      fail("numeric", msg + " at step " + std::to_string(step_) + "; last checkpoint: " +
                          (last_ckpt.empty() ? std::string("none") : last_ckpt.string()));
    }
    trace << LossTrace::csv_rows(rep);
    trace.flush();
    if (step_ % cfg_.checkpoint_every == 0) save_at(step_);
    if (step_ % sample_every == 0) write_sample_grid(numbered("samples", "png", step_));
  }
  if (last_saved != step_) save_at(step_);
  write_sample_grid(numbered("samples", "png", step_));
}

std::vector<Trainer::NetEntry> Trainer::net_entries() {
  std::vector<NetEntry> out;
  out.push_back({"g1", g1_.named_parameters(), &opt_g1_});
  out.push_back({"g2", g2_.named_parameters(), &opt_g2_});
  if (dca_.defined()) out.push_back({"d_coarse_a", dca_.named_parameters(), &opt_dca_});
  if (dfa_.defined()) out.push_back({"d_fine_a", dfa_.named_parameters(), &opt_dfa_});
  if (dcb_.defined()) out.push_back({"d_coarse_b", dcb_.named_parameters(), &opt_dcb_});
  if (dfb_.defined()) out.push_back({"d_fine_b", dfb_.named_parameters(), &opt_dfb_});
  // A random or file-backed perception net reconstructs from the config;
  // only a desk-trained one carries weights the config cannot reproduce
  // without its dataset.
  if (phi_.defined() && cfg_.perception.kind == PerceptionSource::Kind::desk_trained)
    out.push_back({"phi", phi_.named_parameters(), nullptr});
  return out;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  CheckpointFile f;
  f.config_text = train_config_text(cfg_);
  f.config_hash = fnv1a64(f.config_text);
  f.step = step_;
  f.seed = cfg_.seed;
  // net_entries is non-const for the restore path; this use only reads.
  for (const NetEntry& e : const_cast<Trainer*>(this)->net_entries()) {
    NetBlob nb;
    nb.name = e.name;
    for (const auto& [pname, t] : e.params) nb.params.push_back({pname, t.shape(), t.data()});
    if (e.adam) {
      nb.has_adam = true;
      nb.adam_t = e.adam->t();
      nb.adam_m = e.adam->m();
      nb.adam_v = e.adam->v();
    }
    f.nets.push_back(std::move(nb));
  }
  write_checkpoint_file(path, f);
}

Trainer Trainer::from_checkpoint(const std::filesystem::path& path, const Dataset& dataset,
                                 std::optional<uint64_t> expected_config_hash) {
  CheckpointFile f = read_checkpoint_file(path);
  if (expected_config_hash && *expected_config_hash != f.config_hash)
    fail("checkpoint",
         path.string() + " was written by a different configuration (hash mismatch)");
  TrainConfig cfg = parse_train_config_text(f.config_text);
  check(train_config_hash(cfg) == f.config_hash, "checkpoint",
        "embedded config disagrees with its stored hash in " + path.string());
  check(f.seed == cfg.seed, "checkpoint",
        "seed field disagrees with embedded config in " + path.string());

  const bool desk_phi =
      cfg.use_percep && cfg.perception.kind == PerceptionSource::Kind::desk_trained;
  Trainer t(cfg, dataset, /*build_phi=*/!desk_phi);

  auto entries = t.net_entries();
  check(f.nets.size() == entries.size(), "checkpoint",
        "checkpoint holds " + std::to_string(f.nets.size()) + " networks, configuration expects " +
            std::to_string(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const NetBlob& nb = f.nets[i];
    NetEntry& e = entries[i];
    check(nb.name == e.name, "checkpoint",
          "network '" + nb.name + "' where '" + e.name + "' was expected");
    check(nb.params.size() == e.params.size(), "checkpoint",
          "network '" + nb.name + "' parameter count mismatch");
    for (std::size_t j = 0; j < e.params.size(); ++j) {
      const ParamBlob& pb = nb.params[j];
      auto& [pname, tensor] = e.params[j];
      check(pb.name == pname, "checkpoint",
            "parameter '" + nb.name + "/" + pb.name + "' where '" + pname + "' was expected");
      check(pb.shape == tensor.shape(), "checkpoint",
            "parameter " + nb.name + "/" + pname + " shape mismatch: " + pb.shape.str() + " vs " +
                tensor.shape().str());
      tensor.get()->data = pb.data;
    }
    if (e.adam) {
      check(nb.has_adam, "checkpoint", "network '" + nb.name + "' lacks optimizer state");
      e.adam->restore(nb.adam_t, nb.adam_m, nb.adam_v);
    } else {
      check(!nb.has_adam, "checkpoint",
            "network '" + nb.name + "' carries unexpected optimizer state");
    }
  }
  if (desk_phi) t.phi_.freeze();

  t.step_ = f.step;
  t.cursor_a_.draws = std::size_t(f.step) * std::size_t(cfg.batch_size);
  t.cursor_b_.draws = t.cursor_a_.draws;
  return t;
}

InferenceModel load_inference_model(const std::filesystem::path& checkpoint) {
  CheckpointFile f = read_checkpoint_file(checkpoint);
  TrainConfig cfg = parse_train_config_text(f.config_text);
  cfg.validate();

  InferenceModel m;
  m.cfg = cfg;
  m.step = f.step;
  GeneratorConfig gc;
  gc.base_channels = cfg.base_channels;
  gc.residual_blocks = cfg.resolved_residual_blocks();
  m.g1 = Generator(gc, mix_seed(cfg.seed, 1));
  m.g2 = Generator(gc, mix_seed(cfg.seed, 2));

  auto fill = [&](const char* name, const Generator& g) {
    const NetBlob* nb = nullptr;
    for (const NetBlob& n : f.nets)
      if (n.name == name) nb = &n;
    check(nb != nullptr, "checkpoint",
          checkpoint.string() + " lacks network '" + std::string(name) + "'");
    NamedParams ps = g.named_parameters();
    check(nb->params.size() == ps.size(), "checkpoint",
          "network '" + std::string(name) + "' parameter count mismatch");
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const ParamBlob& pb = nb->params[j];
      check(pb.name == ps[j].first && pb.shape == ps[j].second.shape(), "checkpoint",
            "network '" + std::string(name) + "' layout mismatch at parameter " + pb.name);
      ps[j].second.get()->data = pb.data;
    }
  };
  fill("g1", m.g1);
  fill("g2", m.g2);
  return m;
}

AblateResult ablate(const TrainConfig& base, const Dataset& dataset,
                    const std::filesystem::path& out_dir,
                    const std::vector<std::pair<int, int>>& grid_pairs) {
  base.validate();
  check(dataset.test_a.size() > 0, "data", "ablation needs at least one testA probe");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  check(std::filesystem::is_directory(out_dir), "io",
        "cannot create ablation directory " + out_dir.string());

  AblateResult res;
  Tensor4 probe = preprocess(dataset.test_a.records.front().path, base.resolution);
  std::vector<Tensor4> tiles{probe};
  std::vector<std::string> labels{"input"};

  auto run_variant = [&](const std::string& id, const TrainConfig& cfg) {
    Trainer t(cfg, dataset);
    t.run(out_dir / id);
    NoGradGuard ng;
    tiles.push_back(t.g1()(probe));
    labels.push_back(id);
    res.variant_ids.push_back(id);
  };

  for (const char* mode : {"dual", "coarse", "fine"}) {
    for (int k = 0; k < 4; ++k) {
      const bool cyc = !(k & 1);
      const bool percep = !(k & 2);
      TrainConfig cfg = base;
      cfg.use_coarse = std::string(mode) != "fine";
      cfg.use_fine = std::string(mode) != "coarse";
      cfg.use_cyc = cyc;
      cfg.use_percep = percep;
      std::string id = mode;
      if (!cyc) id += "-nc";
      if (!percep) id += "-np";
      run_variant(id, cfg);
    }
  }
  for (const auto& [cg, fg] : grid_pairs) {
    TrainConfig cfg = base;
    cfg.coarse_grid = cg;
    cfg.fine_grid = fg;
    cfg.use_coarse = cfg.use_fine = true;
    cfg.use_cyc = cfg.use_percep = true;
    run_variant("C" + std::to_string(cg) + "F" + std::to_string(fg), cfg);
  }

  res.grid_path = out_dir / "comparison.png";
  export_labeled_grid(tiles, int(tiles.size()), labels, res.grid_path);
  return res;
}

}  // namespace p2c
