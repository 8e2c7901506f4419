#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "p2c/tensor.hpp"

namespace p2c {

// Max over sampled coordinates of |analytic - central difference| /
// max(|analytic|, |numeric|, 1e-8). f must be a pure scalar function of the
// current data of params; it is re-evaluated under perturbation, so it has to
// rebuild its graph on every call. eps must lie in [1e-7, 1e-4].
double grad_check(const std::function<Tensor4()>& f, const std::vector<Tensor4>& params,
                  double eps = 1e-5, int max_coords_per_param = 16, uint64_t seed = 0);

struct GradCheckEntry {
  std::string component;
  double max_rel_error = 0.0;
};

struct GradCheckOptions {
  int size = 16;       // spatial size of the toy inputs
  uint64_t seed = 1;
  double eps = 1e-5;
  // Test hook: perturbs one analytic gradient so the harness must fail.
  bool corrupt = false;
};

// Runs grad_check over every layer type and every loss term on toy networks,
// one entry per component.
std::vector<GradCheckEntry> gradcheck_suite(const GradCheckOptions& opt);

}  // namespace p2c
