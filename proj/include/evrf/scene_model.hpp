#pragma once

#include "evrf/mlp.hpp"
#include "evrf/rng.hpp"

namespace evrf::render {

using nn::Mat;

// Architecture and rendering knobs for the learned scene.
struct ModelConfig {
  int deform_depth = 4;      // layers including the displacement head
  int deform_width = 64;
  int canonical_depth = 4;   // layers including the (intensity, density) head
  int canonical_width = 64;
  int x_freqs = 10;
  int t_freqs = 6;
  int d_freqs = 4;
  bool use_viewdirs = true;
  double bounds = 4.0;       // scene box edge length, origin-centered
  double floor_b = 1e-3;     // additive floor inside log() for brightness changes
  int samples = 64;          // quadrature points per ray
  double znear = 2.0;
  double zfar = 9.0;

  int deform_input_dim() const {
    return nn::encoded_dim(3, x_freqs, true) + nn::encoded_dim(1, t_freqs, true);
  }
  int canonical_input_dim() const {
    return nn::encoded_dim(3, x_freqs, true) + (use_viewdirs ? nn::encoded_dim(3, d_freqs, true) : 0);
  }
  void validate() const;
};

// Deformation network (position, time) -> displacement into the canonical
// frame, plus the canonical radiance field (position, direction) -> scalar
// intensity and density. The displacement is gated by t so it vanishes
// exactly at t = 0.
struct SceneModel {
  ModelConfig config;
  nn::Mlp deform;     // encoded (x, t) -> 3
  nn::Mlp canonical;  // encoded (x [, d]) -> (intensity_pre, density_pre)

  void validate() const;

  // Plain (no-gradient) field query for N row-stacked points at time t.
  // Applies the t-gate, the box mask, sigmoid intensity and softplus density.
  // `dirs` may be empty when use_viewdirs is false.
  void query(const Mat& points, const Mat& dirs, double t, Eigen::VectorXd& intensity,
             Eigen::VectorXd& density) const;
};

SceneModel make_scene_model(const ModelConfig& config, Rng& rng);

// 1 where the point is inside the origin-centered box of edge `bounds`, else 0.
Eigen::VectorXd box_mask(const Mat& points, double bounds);

}  // namespace evrf::render
