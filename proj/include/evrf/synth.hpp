#pragma once

#include <Eigen/Geometry>
#include <string>
#include <vector>

#include "evrf/events.hpp"
#include "evrf/render.hpp"

namespace evrf::synth {

using render::Camera;
using render::Mat;

struct Keyframe {
  double t = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
};

struct Primitive {
  enum class Shape { kSphere, kBox } shape = Shape::kSphere;
  double size = 0.5;  // sphere radius or box half-extent
  double albedo = 0.8;
  double density = 50.0;
  std::vector<Keyframe> track;  // sorted by t; single entry = static

  // Pose at t: translation lerp + rotation slerp between bracketing keyframes.
  Eigen::Isometry3d pose_at(double t) const;
};

// Closed-form dynamic scene: rigid primitives on keyframed tracks inside an
// origin-centered box. The ground-truth stand-in for a rendered dataset.
struct AnalyticScene {
  std::vector<Primitive> primitives;
  double bounds = 4.0;

  // Verifies every primitive stays inside the box over t in [0,1].
  void validate(int t_steps = 65) const;

  // (albedo, density) of the first containing primitive; (0,0) outside all.
  void query(const Mat& points, double t, Eigen::VectorXd& intensity, Eigen::VectorXd& density) const;

  render::FieldFn field() const;
};

Image gt_render(const AnalyticScene& scene, const Camera& camera, double t, int samples,
                Rng* jitter = nullptr);

// Built-in desk-scale scenes.
AnalyticScene translating_sphere_scene(double radius = 0.6, double albedo = 0.85, double density = 50.0,
                                       const Eigen::Vector3d& from = {-1.0, 0.0, 0.0},
                                       const Eigen::Vector3d& to = {1.0, 0.0, 0.0});
AnalyticScene translating_box_scene(double half_extent = 0.55, double albedo = 0.85, double density = 50.0,
                                    const Eigen::Vector3d& from = {-1.0, 0.0, 0.0},
                                    const Eigen::Vector3d& to = {1.0, 0.0, 0.0});
AnalyticScene scene_from_preset(const std::string& name);

struct GenConfig {
  int width = 48;
  int height = 48;
  int n_views = 8;
  int n_frames = 32;                  // stored frames over t in [0, 1]
  int supersample = 8;                // extra render steps between stored frames for event timing
  int gt_samples = 96;                // quadrature points for the ground-truth renderer
  double camera_radius = 5.5;
  double camera_angle_x = 0.76;
  double elevation_deg = 8.0;
  double znear = 2.0;
  double zfar = 9.0;
  double floor_b = 1e-3;              // log floor applied to rendered intensities
  events::Thresholds thresholds;
  std::vector<double> val_azimuths;   // empty: train azimuth + half spacing
  int threads = 0;
};

// Renders a multi-view event dataset to disk: views.json (camera metadata),
// one EVD1 eventstream per view, and the stored ground-truth frames as
// 16-bit PGM under frames/.
void gen_dataset(const AnalyticScene& scene, const GenConfig& config, const std::string& out_dir);

}  // namespace evrf::synth
