#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "p2c/data.hpp"
#include "p2c/networks.hpp"
#include "p2c/tensor.hpp"

namespace p2c {

// Pluggable classifier for the score metric. probabilities(image, index)
// returns one distribution over num_classes per call; index is the image's
// position in the scored list (stub classifiers key off it).
struct ClassifierHead {
  std::string id;
  int num_classes = 0;
  int resolution = 0;  // 0 = accepts any input size
  std::function<std::vector<double>(const Tensor4& image, std::size_t index)> probabilities;
};

// Mean and population stddev over splits of exp(mean KL(p_i || p_bar)),
// chunks contiguous in list order. Zero-probability terms drop out of the KL.
std::pair<double, double> inception_score(const ClassifierHead& clf,
                                          const std::vector<Tensor4>& images, int splits);

struct ScoreReport {
  std::string metric = "inception_score";
  double mean = 0.0;
  double stddev = 0.0;
  int n_images = 0;
  int splits = 0;
  std::string classifier_id;
  std::string warning;

  std::string to_json() const;
};

ScoreReport score_images(const ClassifierHead& clf, const std::vector<Tensor4>& images,
                         int splits);

// Stubs with closed-form scores: the uniform classifier scores exactly 1, the
// balanced one-hot rotation scores the class count.
ClassifierHead uniform_classifier(int classes);
ClassifierHead round_robin_onehot_classifier(int classes);

// Tiny A-vs-B domain classifier trained at desk scale; the stand-in for a
// large pretrained model. Its id records the provenance so reports can warn
// that scores are not comparable to published numbers.
ClassifierHead desk_classifier(const Dataset& ds, uint64_t seed, int steps, int resolution,
                               int base_channels = 16);

// Distribution of patch-grid responses over image sets, for inspecting what
// each discriminator scale reacts to.
struct PatchResponseStats {
  double mean = 0.0;
  double variance = 0.0;
  Tensor4 cell_mean;  // (1,1,g,g), per-cell average response
};
struct PatchResponseSummary {
  PatchResponseStats real, fake;
};
PatchResponseSummary patch_response_stats(const PatchDiscriminator& d,
                                          const std::vector<Tensor4>& real,
                                          const std::vector<Tensor4>& fake);

}  // namespace p2c
