#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "p2c/data.hpp"
#include "p2c/losses.hpp"
#include "p2c/networks.hpp"
#include "p2c/optim.hpp"

namespace p2c {

enum class NoiseMode { fixed, range };

struct TrainNoise {
  NoiseMode mode = NoiseMode::fixed;
  double alpha = 0.9;  // training default: mild corruption
  double alpha_min = 0.5;
  double alpha_max = 1.0;
};

struct TrainConfig {
  int resolution = 256;
  int base_channels = 64;
  int residual_blocks = 0;  // 0 = pick by resolution
  int coarse_grid = 4;
  int fine_grid = 16;
  int batch_size = 1;
  long total_steps = 200;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights weights;
  bool use_coarse = true;
  bool use_fine = true;
  bool use_cyc = true;
  bool use_percep = true;
  bool percep_symmetric = false;
  TrainNoise noise;
  uint64_t seed = 1;
  long checkpoint_every = 100;
  long sample_every = 0;  // 0 = follow checkpoint_every
  PerceptionSource perception = PerceptionSource::frozen_random(7);

  int resolved_residual_blocks() const {
    return residual_blocks > 0 ? residual_blocks : (resolution >= 128 ? 9 : 6);
  }
  long resolved_sample_every() const {
    return sample_every > 0 ? sample_every : checkpoint_every;
  }
  void validate() const;
};

struct DirectionReport {
  double adv_g = 0.0;        // renormalized coarse/fine mix, generator side
  double adv_d_coarse = 0.0; // discriminator-side losses
  double adv_d_fine = 0.0;
  double cyc = 0.0;          // this direction's reconstruction term, unweighted
  double percep = 0.0;       // unweighted
  double total_g = 0.0;      // weighted composition for this direction
};

struct LossReport {
  long step = 0;
  DirectionReport a_to_b, b_to_a;
};

struct LossTrace {
  std::vector<LossReport> steps;
  static std::string csv_header();  // step,dir,adv_g,adv_dc,adv_df,cyc,percep,total
  static std::string csv_rows(const LossReport& r);
};

// The full adversarial loop: per step, update enabled discriminators on
// (real, detached fake), then both generators against the composed objective.
// Deterministic: (seed, config, data) fixes the whole parameter trajectory.
class Trainer {
public:
  Trainer(const TrainConfig& cfg, const Dataset& dataset);
  static Trainer from_checkpoint(const std::filesystem::path& path, const Dataset& dataset,
                                 std::optional<uint64_t> expected_config_hash = std::nullopt);

  LossReport train_step();                      // samples its own batch
  LossReport train_step(const RawBatch& batch); // caller-supplied [0,255] batch

  // Runs to total_steps, writing trace.csv, checkpoints/ and samples/ under
  // out_dir. On a non-finite loss, flushes the trace and halts naming the
  // last checkpoint.
  void run(const std::filesystem::path& out_dir);

  void save_checkpoint(const std::filesystem::path& path) const;

  long step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const LossTrace& trace() const { return trace_; }
  const Generator& g1() const { return g1_; }
  const Generator& g2() const { return g2_; }
  const PatchDiscriminator& d_coarse_a() const { return dca_; }
  const PatchDiscriminator& d_fine_a() const { return dfa_; }
  const PatchDiscriminator& d_coarse_b() const { return dcb_; }
  const PatchDiscriminator& d_fine_b() const { return dfb_; }
  const PerceptionNet& phi() const { return phi_; }

private:
  Trainer(const TrainConfig& cfg, const Dataset& dataset, bool build_phi);

  RawBatch next_batch();
  void set_disc_grads(bool enabled);
  void write_sample_grid(const std::filesystem::path& file) const;

  // Checkpoint layout: fixed net order, optimizer slot where one exists.
  struct NetEntry {
    std::string name;
    NamedParams params;
    Adam* adam = nullptr;
  };
  std::vector<NetEntry> net_entries();

  TrainConfig cfg_;
  const Dataset* dataset_ = nullptr;
  Generator g1_, g2_;
  PatchDiscriminator dca_, dfa_, dcb_, dfb_;
  PerceptionNet phi_;
  Adam opt_g1_, opt_g2_, opt_dca_, opt_dfa_, opt_dcb_, opt_dfb_;
  DomainCursor cursor_a_, cursor_b_;
  long step_ = 0;
  LossTrace trace_;
  std::vector<Tensor4> probes_;  // normalized sample-grid inputs
};

// Checkpoint contents needed for inference-only commands; no dataset.
struct InferenceModel {
  TrainConfig cfg;
  long step = 0;
  Generator g1, g2;
};
InferenceModel load_inference_model(const std::filesystem::path& checkpoint);

// Variant matrix: {dual, coarse-only, fine-only} x {+/-cyc} x {+/-percep}
// (12 runs), plus one dual run per (coarse_grid, fine_grid) pair. All runs
// share the base seed. Emits per-variant run dirs and a labeled side-by-side
// comparison grid.
struct AblateResult {
  std::vector<std::string> variant_ids;
  std::filesystem::path grid_path;
};
AblateResult ablate(const TrainConfig& base, const Dataset& dataset,
                    const std::filesystem::path& out_dir,
                    const std::vector<std::pair<int, int>>& grid_pairs);

}  // namespace p2c
