#pragma once

#include <span>
#include <vector>

#include "evrf/rng.hpp"
#include "evrf/tape.hpp"

namespace evrf::nn {

enum class Activation : std::uint8_t { kNone, kRelu, kSoftplus, kSigmoid };

struct LinearLayer {
  Mat w;  // in x out
  Mat b;  // 1 x out
  Activation act = Activation::kNone;
};

// Plain fully-connected network; rows of the input are independent samples.
struct Mlp {
  std::vector<LinearLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.rows()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.cols()); }
  std::size_t parameter_count() const;
  void validate() const;

  Mat forward(const Mat& input) const;
};

// Uniform fan-in initialization (bound sqrt(6/fan_in)), zero biases; the last
// layer is scaled by `last_layer_scale` (small values keep freshly initialized
// heads near zero).
Mlp make_mlp(std::span<const int> dims, Activation hidden, Activation output, Rng& rng,
             double last_layer_scale = 1.0);

// Tape-registered copies of one network's parameters.
struct MlpVars {
  std::vector<std::pair<int, int>> layers;  // (weight node, bias node)
  std::vector<Activation> acts;
};

MlpVars register_mlp(Tape& tape, const Mlp& mlp, bool requires_grad);
int mlp_forward(Tape& tape, const MlpVars& vars, int input);

// Adds tape-accumulated parameter adjoints into an Mlp-shaped gradient buffer.
void accumulate_mlp_grads(const Tape& tape, const MlpVars& vars, Mlp& grads);
Mlp zeros_like(const Mlp& mlp);

// [v?, sin(2^k pi v), cos(2^k pi v)]_{k<n_freq}; same layout as Tape::posenc.
Mat positional_encode(const Mat& input, int n_freq, bool include_input);
std::vector<double> positional_encode(std::span<const double> v, int n_freq, bool include_input);
inline int encoded_dim(int dim, int n_freq, bool include_input) {
  return dim * ((include_input ? 1 : 0) + 2 * n_freq);
}

}  // namespace evrf::nn
