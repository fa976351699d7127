// Independent reference implementations used only by tests. These stay
// deliberately naive (explicit loops, no shared code with the library paths
// they check).
#pragma once

#include <functional>

#include "evrf/events.hpp"
#include "evrf/mlp.hpp"

namespace evrf::test {

nn::Mat naive_matmul(const nn::Mat& a, const nn::Mat& b);

// Layer-by-layer forward with scalar loops and libm activations.
nn::Mat naive_mlp_forward(const nn::Mlp& mlp, const nn::Mat& input);

struct PixelCounts {
  int width = 0, height = 0;
  std::vector<int> pos, neg;

  int net(int x, int y) const { return pos[y * width + x] - neg[y * width + x]; }
};

// Direct scan over the raw event list, [t0, t1).
PixelCounts brute_force_counts(const events::EventStream& stream, double t0, double t1);

// Central finite difference of `eval` with respect to *param.
double finite_difference(const std::function<double()>& eval, double* param, double step);

}  // namespace evrf::test
