#include "evrf/scene_model.hpp"

#include <cmath>

#include "evrf/errors.hpp"

namespace evrf::render {

void ModelConfig::validate() const {
  if (deform_depth < 2 || canonical_depth < 2) throw ArgumentError("model: need at least two layers per net");
  if (deform_width < 1 || canonical_width < 1) throw ArgumentError("model: bad width");
  if (x_freqs < 0 || t_freqs < 0 || d_freqs < 0) throw ArgumentError("model: bad encoder frequencies");
  if (!(bounds > 0.0) || !(floor_b > 0.0)) throw ArgumentError("model: bounds and floor must be positive");
  if (samples < 2) throw ArgumentError("model: need at least two samples per ray");
  if (!(znear > 0.0) || !(znear < zfar)) throw ArgumentError("model: need 0 < znear < zfar");
}

void SceneModel::validate() const {
  config.validate();
  deform.validate();
  canonical.validate();
  if (deform.input_dim() != config.deform_input_dim() || deform.output_dim() != 3)
    throw ArgumentError("model: deformation net shape does not match config");
  if (canonical.input_dim() != config.canonical_input_dim() || canonical.output_dim() != 2)
    throw ArgumentError("model: canonical net shape does not match config");
}

Eigen::VectorXd box_mask(const Mat& points, double bounds) {
  const double half = 0.5 * bounds;
  Eigen::VectorXd mask(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    mask[i] = (std::abs(points(i, 0)) <= half && std::abs(points(i, 1)) <= half &&
               std::abs(points(i, 2)) <= half)
                  ? 1.0
                  : 0.0;
  return mask;
}

void SceneModel::query(const Mat& points, const Mat& dirs, double t, Eigen::VectorXd& intensity,
                       Eigen::VectorXd& density) const {
  const Eigen::Index n = points.rows();
  Mat t_col = Mat::Constant(n, 1, t);
  Mat deform_in(n, config.deform_input_dim());
  deform_in << nn::positional_encode(points, config.x_freqs, true),
      nn::positional_encode(t_col, config.t_freqs, true);
  Mat displaced = points + t * deform.forward(deform_in);

  Mat canon_in;
  if (config.use_viewdirs) {
    if (dirs.rows() != n) throw ArgumentError("model: direction rows do not match points");
    canon_in.resize(n, config.canonical_input_dim());
    canon_in << nn::positional_encode(displaced, config.x_freqs, true),
        nn::positional_encode(dirs, config.d_freqs, true);
  } else {
    canon_in = nn::positional_encode(displaced, config.x_freqs, true);
  }
  Mat out = canonical.forward(canon_in);

  intensity.resize(n);
  density.resize(n);
  Eigen::VectorXd mask = box_mask(points, config.bounds);
  for (Eigen::Index i = 0; i < n; ++i) {
    double c = out(i, 0);
    intensity[i] = c >= 0.0 ? 1.0 / (1.0 + std::exp(-c)) : std::exp(c) / (1.0 + std::exp(c));
    double s = out(i, 1);
    density[i] = mask[i] * (s > 30.0 ? s : std::log1p(std::exp(s)));
  }
}

SceneModel make_scene_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  SceneModel model;
  model.config = config;

  std::vector<int> deform_dims{config.deform_input_dim()};
  for (int i = 0; i < config.deform_depth - 1; ++i) deform_dims.push_back(config.deform_width);
  deform_dims.push_back(3);
  Rng deform_rng = rng.derive("deform");
  model.deform = nn::make_mlp(deform_dims, nn::Activation::kRelu, nn::Activation::kNone, deform_rng, 0.01);

  std::vector<int> canon_dims{config.canonical_input_dim()};
  for (int i = 0; i < config.canonical_depth - 1; ++i) canon_dims.push_back(config.canonical_width);
  canon_dims.push_back(2);
  Rng canon_rng = rng.derive("canonical");
  model.canonical = nn::make_mlp(canon_dims, nn::Activation::kRelu, nn::Activation::kNone, canon_rng, 1.0);
  return model;
}

}  // namespace evrf::render
