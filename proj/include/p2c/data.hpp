#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2c/tensor.hpp"

namespace p2c {

enum class Split { trainA, trainB, testA, testB };

std::string split_name(Split s);

struct ImageRecord {
  std::string id;  // file name, unique within the split
  std::filesystem::path path;
};

struct DomainFolder {
  std::filesystem::path root;
  Split split = Split::trainA;
  std::vector<ImageRecord> records;  // lexicographic by id
  std::size_t size() const { return records.size(); }
};

struct Dataset {
  std::filesystem::path root;
  DomainFolder train_a, train_b, test_a, test_b;
};

// Loads the trainA/trainB/testA/testB tree, validating that every file
// decodes. Missing or empty domains and undecodable files are rejected with
// diagnostics naming the offender.
Dataset load_dataset(const std::filesystem::path& root);

// Decode + bilinear resize to resolution x resolution, RGB, values in
// [0,255]. The resize is skipped entirely when the file is already at the
// requested size.
Tensor4 load_image_raw(const std::filesystem::path& file, int resolution);
// v/127.5 - 1, into [-1,1].
Tensor4 normalize_to_unit(const Tensor4& raw);
// Both steps.
Tensor4 preprocess(const std::filesystem::path& file, int resolution);

Tensor4 resize_bilinear(const Tensor4& img, int out_h, int out_w);

// Epoch permutation as a pure function of (count, seed, epoch, domain tag),
// so samplers can be reconstructed at any draw index without replaying.
std::vector<std::size_t> epoch_order(std::size_t count, uint64_t seed, uint64_t epoch,
                                     uint64_t domain_tag);

// Without-replacement cursor over one domain: runs through a seeded epoch
// permutation, reshuffling each wrap. Deterministic in (seed, tag, draws).
struct DomainCursor {
  uint64_t seed = 0;
  uint64_t tag = 0;
  std::size_t draws = 0;

  std::size_t next(std::size_t count);

private:
  uint64_t cached_epoch_ = ~uint64_t(0);
  std::vector<std::size_t> cached_order_;
};

struct RawBatch {
  Tensor4 x, y;  // [0,255]
  std::vector<std::string> x_ids, y_ids;
};

struct UnpairedBatch {
  Tensor4 x, y;  // [-1,1]
  std::vector<std::string> x_ids, y_ids;
};

// Samples n from each domain independently; no identity pairing ever.
RawBatch sample_unpaired_raw(const DomainFolder& a, const DomainFolder& b, int n, int resolution,
                             DomainCursor& ca, DomainCursor& cb);
UnpairedBatch sample_unpaired_batch(const DomainFolder& a, const DomainFolder& b, int n,
                                    int resolution, DomainCursor& ca, DomainCursor& cb);

// Writers take [-1,1] images shaped (1,3,h,w) and map back to [0,255].
void export_image(const Tensor4& img, const std::filesystem::path& path);
void export_grid(const std::vector<Tensor4>& images, int columns,
                 const std::filesystem::path& path);
// Same, with a caption strip naming each column.
void export_labeled_grid(const std::vector<Tensor4>& images, int columns,
                         const std::vector<std::string>& column_labels,
                         const std::filesystem::path& path);

}  // namespace p2c
