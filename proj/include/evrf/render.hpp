#pragma once

#include <functional>

#include "evrf/camera.hpp"
#include "evrf/image.hpp"
#include "evrf/scene_model.hpp"
#include "evrf/tape.hpp"

namespace evrf::render {

// Samples along one ray with everything the compositor produces. Positions
// are optional bookkeeping; compositing needs deltas, densities, intensities.
struct RaySampleSet {
  Eigen::VectorXd depths;
  Mat positions;  // S x 3, may be empty
  Eigen::VectorXd deltas;
  Eigen::VectorXd density;
  Eigen::VectorXd intensity;
  Eigen::VectorXd transmittance;  // T_1 = 1, non-increasing
  Eigen::VectorXd alpha;
  Eigen::VectorXd weights;  // T_i * alpha_i
};

// Front-to-back alpha compositing: C = sum_i T_i alpha_i c_i with
// T_i = exp(-sum_{j<i} sigma_j delta_j), alpha_i = 1 - exp(-sigma_i delta_i).
// Fills transmittance/alpha/weights; throws on negative density.
double composite(RaySampleSet& samples);

// Any queryable radiance field: N row-stacked points (+ unit view directions,
// may be empty) at time t -> per-point intensity and density.
using FieldFn = std::function<void(const Mat& points, const Mat& dirs, double t,
                                   Eigen::VectorXd& intensity, Eigen::VectorXd& density)>;

struct RenderOptions {
  int samples = 64;
  bool with_dirs = false;  // pass per-sample view directions to the field
  Rng* jitter = nullptr;   // stratified jitter; midpoints when null
};

// Renders arbitrary rays through the shared quadrature + compositing path.
Eigen::VectorXd render_rays(const FieldFn& field, std::span<const Ray> rays, double znear, double zfar,
                            double t, const RenderOptions& opts);

Image render_field_image(const FieldFn& field, const Camera& camera, double t, const RenderOptions& opts);

FieldFn model_field(const SceneModel& model);

// Full-frame intensity render of the learned model at time t.
Image render_image(const SceneModel& model, const Camera& camera, double t, Rng* jitter = nullptr);

// Predicted per-ray log-brightness change between t0 and t1:
// log(C(t1) + floor_b) - log(C(t0) + floor_b). Sampling is keyed on the
// timestamp so the result is antisymmetric under swapping t0 and t1.
Eigen::VectorXd render_delta_l(const SceneModel& model, std::span<const Ray> rays, double t0, double t1,
                               Rng* jitter = nullptr);

// ---- differentiable path -------------------------------------------------

struct ModelVars {
  nn::MlpVars deform;
  nn::MlpVars canonical;
};

ModelVars register_model(nn::Tape& tape, const SceneModel& model, bool requires_grad = true);

// Constant per-chunk geometry shared by the graph builders.
struct ChunkGeometry {
  Mat points;      // (rays*samples) x 3
  Mat deform_enc;  // encoded (x, t) input to the deformation net
  Mat dir_enc;     // encoded view dirs, empty unless use_viewdirs
  Eigen::VectorXd mask;
  Eigen::VectorXd deltas;
  double t = 0.0;
  int rays = 0;
  int samples = 0;
};

ChunkGeometry make_chunk_geometry(const ModelConfig& config, std::span<const Ray> rays, double t,
                                  Rng* jitter);

// Composited per-ray intensity C as a tape node (rays x 1).
int render_intensity_graph(nn::Tape& tape, const ModelVars& vars, const ModelConfig& config,
                           const ChunkGeometry& geom);

// Per-ray predicted change log(C1 + floor_b) - log(C0 + floor_b).
int render_delta_l_graph(nn::Tape& tape, const ModelVars& vars, const ModelConfig& config,
                         const ChunkGeometry& geom_t0, const ChunkGeometry& geom_t1);

}  // namespace evrf::render
