#include "evrf/adam.hpp"

#include <cmath>

#include "evrf/errors.hpp"

namespace evrf::nn {

AdamState AdamState::zeros_for(const std::vector<const Mat*>& params) {
  AdamState s;
  for (const Mat* p : params) {
    s.m.push_back(Mat::Zero(p->rows(), p->cols()));
    s.v.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  return s;
}

AdamState AdamState::zeros_for(const std::vector<Mat*>& params) {
  return zeros_for(std::vector<const Mat*>(params.begin(), params.end()));
}

void adam_step(std::vector<Mat*> params, const std::vector<const Mat*>& grads, AdamState& state,
               const AdamConfig& config, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ArgumentError("adam: parameter/gradient/state count mismatch");

  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i]->rows() != params[i]->rows() || grads[i]->cols() != params[i]->cols())
      throw ArgumentError("adam: gradient shape mismatch");
    if (!grads[i]->allFinite()) throw NumericError("adam: non-finite gradient");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * (*grads[i]);
    state.v[i] = config.beta2 * state.v[i].array() + (1.0 - config.beta2) * grads[i]->array().square();
    params[i]->array() -=
        lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + config.eps);
  }
}

std::vector<Mat*> parameter_list(Mlp& a, Mlp& b) {
  std::vector<Mat*> out;
  for (auto& l : a.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  for (auto& l : b.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Mat*> parameter_list(const Mlp& a, const Mlp& b) {
  std::vector<const Mat*> out;
  for (const auto& l : a.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  for (const auto& l : b.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

}  // namespace evrf::nn
