#include "evrf/mlp.hpp"

#include <cmath>

namespace evrf::nn {

namespace {

void apply_activation(Mat& x, Activation act) {
  switch (act) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      x = x.cwiseMax(0.0);
      break;
    case Activation::kSoftplus:
      x = x.array().unaryExpr([](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }).matrix();
      break;
    case Activation::kSigmoid:
      x = x.array().unaryExpr([](double v) {
             return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
           }).matrix();
      break;
  }
}

int tape_activation(Tape& tape, int x, Activation act) {
  switch (act) {
    case Activation::kNone:
      return x;
    case Activation::kRelu:
      return tape.relu(x);
    case Activation::kSoftplus:
      return tape.softplus(x);
    case Activation::kSigmoid:
      return tape.sigmoid(x);
  }
  return x;
}

}  // namespace

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size()) + static_cast<std::size_t>(l.b.size());
  return n;
}

void Mlp::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LinearLayer& l = layers[i];
    if (l.b.rows() != 1 || l.b.cols() != l.w.cols()) throw ArgumentError("mlp: bias shape mismatch");
    if (i > 0 && layers[i - 1].w.cols() != l.w.rows()) throw ArgumentError("mlp: consecutive layer shapes do not compose");
    if (!l.w.allFinite() || !l.b.allFinite()) throw NumericError("mlp: non-finite parameter");
  }
}

Mat Mlp::forward(const Mat& input) const {
  if (input.cols() != input_dim()) throw ArgumentError("mlp: input width does not match first layer");
  Mat h = input;
  for (const LinearLayer& l : layers) {
    Mat z = (h * l.w).rowwise() + l.b.row(0);
    apply_activation(z, l.act);
    h = std::move(z);
  }
  return h;
}

Mlp make_mlp(std::span<const int> dims, Activation hidden, Activation output, Rng& rng,
             double last_layer_scale) {
  if (dims.size() < 2) throw ArgumentError("mlp: need at least input and output dims");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    LinearLayer l;
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    if (i + 2 == dims.size()) bound *= last_layer_scale;
    l.w.resize(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) l.w(r, c) = rng.uniform(-bound, bound);
    l.b = Mat::Zero(1, fan_out);
    l.act = (i + 2 == dims.size()) ? output : hidden;
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

MlpVars register_mlp(Tape& tape, const Mlp& mlp, bool requires_grad) {
  MlpVars vars;
  for (const LinearLayer& l : mlp.layers) {
    vars.layers.emplace_back(tape.leaf(l.w, requires_grad), tape.leaf(l.b, requires_grad));
    vars.acts.push_back(l.act);
  }
  return vars;
}

int mlp_forward(Tape& tape, const MlpVars& vars, int input) {
  int h = input;
  for (std::size_t i = 0; i < vars.layers.size(); ++i) {
    h = tape.add_row(tape.matmul(h, vars.layers[i].first), vars.layers[i].second);
    h = tape_activation(tape, h, vars.acts[i]);
  }
  return h;
}

void accumulate_mlp_grads(const Tape& tape, const MlpVars& vars, Mlp& grads) {
  for (std::size_t i = 0; i < vars.layers.size(); ++i) {
    const Mat& gw = tape.grad(vars.layers[i].first);
    const Mat& gb = tape.grad(vars.layers[i].second);
    if (gw.size() > 0) grads.layers[i].w += gw;
    if (gb.size() > 0) grads.layers[i].b += gb;
  }
}

Mlp zeros_like(const Mlp& mlp) {
  Mlp out;
  for (const LinearLayer& l : mlp.layers) {
    LinearLayer z;
    z.w = Mat::Zero(l.w.rows(), l.w.cols());
    z.b = Mat::Zero(1, l.b.cols());
    z.act = l.act;
    out.layers.push_back(std::move(z));
  }
  return out;
}

Mat positional_encode(const Mat& input, int n_freq, bool include_input) {
  Tape scratch;
  int x = scratch.constant(input);
  return scratch.val(scratch.posenc(x, n_freq, include_input));
}

std::vector<double> positional_encode(std::span<const double> v, int n_freq, bool include_input) {
  Mat row(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = v[i];
  Mat enc = positional_encode(row, n_freq, include_input);
  return std::vector<double>(enc.data(), enc.data() + enc.size());
}

}  // namespace evrf::nn
