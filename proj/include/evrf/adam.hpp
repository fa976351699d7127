#pragma once

#include <cstdint>
#include <vector>

#include "evrf/mlp.hpp"

namespace evrf::nn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  std::int64_t step = 0;

  static AdamState zeros_for(const std::vector<const Mat*>& params);
  static AdamState zeros_for(const std::vector<Mat*>& params);
};

// One bias-corrected Adam update. `lr` overrides the config's base rate (the
// warm-up schedule owns the effective rate). Throws NumericError on
// non-finite gradients.
void adam_step(std::vector<Mat*> params, const std::vector<const Mat*>& grads, AdamState& state,
               const AdamConfig& config, double lr);

// Parameter tensor lists for (deformation, canonical) network pairs.
std::vector<Mat*> parameter_list(Mlp& a, Mlp& b);
std::vector<const Mat*> parameter_list(const Mlp& a, const Mlp& b);

}  // namespace evrf::nn
