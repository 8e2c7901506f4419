#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "p2c/trainer.hpp"

namespace p2c {

// Runtime configuration: "key = value" lines, '#' comments, unknown keys
// rejected by name.
struct RunConfig {
  std::filesystem::path data_root;  // data.root
  std::filesystem::path out_dir;    // run.out_dir
  TrainConfig train;
  std::vector<std::pair<int, int>> ablate_grids = {{4, 8}, {4, 16}, {4, 32}};
};

uint64_t fnv1a64(const std::string& text);

RunConfig parse_run_config_text(const std::string& text, const std::string& context);
RunConfig parse_run_config_file(const std::filesystem::path& path);

// One command-line "key=value" applied on top of a parsed config.
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

// Every key, resolved, in a fixed order; doubles printed round-trip exact.
std::string canonical_run_config_text(const RunConfig& cfg);

// The model-semantics subset embedded in checkpoints; its hash guards
// resumption. Data paths, output paths and ablation extras stay out.
std::string train_config_text(const TrainConfig& cfg);
uint64_t train_config_hash(const TrainConfig& cfg);
TrainConfig parse_train_config_text(const std::string& text);

}  // namespace p2c
