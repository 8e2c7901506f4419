#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2c/tensor.hpp"

namespace p2c {

// On-disk training state: magic "DPTC", version, config hash + embedded
// config text, step counter, master seed (the only rng state: all streams
// are derived from (seed, step, purpose) counters), then named parameter
// blobs and optimizer moments per network. Fixed field order makes the
// round trip bytewise exact.

struct ParamBlob {
  std::string name;
  Shape4 shape;
  std::vector<double> data;
};

struct NetBlob {
  std::string name;
  std::vector<ParamBlob> params;
  bool has_adam = false;
  long adam_t = 0;
  std::vector<std::vector<double>> adam_m, adam_v;  // parallel to params
};

struct CheckpointFile {
  uint64_t config_hash = 0;
  std::string config_text;
  long step = 0;
  uint64_t seed = 0;
  std::vector<NetBlob> nets;
};

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

}  // namespace p2c
