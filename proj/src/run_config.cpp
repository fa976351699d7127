#include "evrf/run_config.hpp"

namespace evrf::io {

train::TrainConfig load_train_config(Config& c) {
  train::TrainConfig t;
  t.total_iterations = c.get_int("train", "total_iterations", t.total_iterations);
  t.rays_per_iteration = c.get_int("train", "rays_per_iteration", t.rays_per_iteration);
  t.positive_fraction = c.get_double("train", "positive_fraction", t.positive_fraction);
  t.lr = c.get_double("train", "lr", t.lr);
  t.lr_warmup = c.get_int("train", "lr_warmup", t.lr_warmup);
  t.crop_iterations = c.get_int("train", "crop_iterations", t.crop_iterations);
  t.crop_pad = c.get_double("train", "crop_pad", t.crop_pad);
  t.progressive_iterations = c.get_int("train", "progressive_iterations", t.progressive_iterations);
  t.halving_milestones = c.get_ints("train", "halving_milestones", t.halving_milestones);
  if (c.has("train", "c_pos") || c.has("train", "c_neg")) {
    events::Thresholds thr;
    thr.c_pos = c.get_double("train", "c_pos", thr.c_pos);
    thr.c_neg = c.get_double("train", "c_neg", thr.c_neg);
    t.thresholds = thr;
  }
  t.seed = c.get_u64("train", "seed", t.seed);
  t.checkpoint_every = c.get_int("train", "checkpoint_every", t.checkpoint_every);
  t.log_every = c.get_int("train", "log_every", t.log_every);
  t.chunk_rays = c.get_int("train", "chunk_rays", t.chunk_rays);
  t.threads = c.get_int("train", "threads", t.threads);
  t.deterministic = c.get_bool("train", "deterministic", t.deterministic);
  t.adam.lr = t.lr;
  t.adam.beta1 = c.get_double("train", "adam_beta1", t.adam.beta1);
  t.adam.beta2 = c.get_double("train", "adam_beta2", t.adam.beta2);
  t.adam.eps = c.get_double("train", "adam_eps", t.adam.eps);

  render::ModelConfig& m = t.model;
  m.deform_depth = c.get_int("model", "deform_depth", m.deform_depth);
  m.deform_width = c.get_int("model", "deform_width", m.deform_width);
  m.canonical_depth = c.get_int("model", "canonical_depth", m.canonical_depth);
  m.canonical_width = c.get_int("model", "canonical_width", m.canonical_width);
  m.x_freqs = c.get_int("model", "x_freqs", m.x_freqs);
  m.t_freqs = c.get_int("model", "t_freqs", m.t_freqs);
  m.d_freqs = c.get_int("model", "d_freqs", m.d_freqs);
  m.use_viewdirs = c.get_bool("model", "use_viewdirs", m.use_viewdirs);
  m.bounds = c.get_double("model", "bounds", m.bounds);
  m.floor_b = c.get_double("model", "floor_b", m.floor_b);
  m.samples = c.get_int("model", "samples", m.samples);
  m.znear = c.get_double("model", "znear", m.znear);
  m.zfar = c.get_double("model", "zfar", m.zfar);
  return t;
}

synth::AnalyticScene load_scene(Config& c) {
  const std::string preset = c.get_string("scene", "preset", "translating_sphere");
  auto vec3 = [&](const std::string& key, const Eigen::Vector3d& fallback) {
    std::vector<double> v =
        c.get_doubles("scene", key, {fallback.x(), fallback.y(), fallback.z()});
    if (v.size() != 3) throw FormatError("scene." + key + " needs exactly three components");
    return Eigen::Vector3d(v[0], v[1], v[2]);
  };
  synth::AnalyticScene scene;
  if (preset == "translating_sphere" || preset == "translating_box") {
    const double size = c.get_double("scene", "size", preset == "translating_box" ? 0.55 : 0.6);
    const double albedo = c.get_double("scene", "albedo", 0.85);
    const double density = c.get_double("scene", "density", 50.0);
    const Eigen::Vector3d from = vec3("from", {-1.0, 0.0, 0.0});
    const Eigen::Vector3d to = vec3("to", {1.0, 0.0, 0.0});
    scene = preset == "translating_box" ? synth::translating_box_scene(size, albedo, density, from, to)
                                        : synth::translating_sphere_scene(size, albedo, density, from, to);
  } else {
    scene = synth::scene_from_preset(preset);
  }
  scene.bounds = c.get_double("scene", "bounds", scene.bounds);
  scene.validate();
  return scene;
}

synth::GenConfig load_gen_config(Config& c) {
  synth::GenConfig g;
  g.width = c.get_int("gen", "width", g.width);
  g.height = c.get_int("gen", "height", g.height);
  g.n_views = c.get_int("gen", "n_views", g.n_views);
  g.n_frames = c.get_int("gen", "n_frames", g.n_frames);
  g.supersample = c.get_int("gen", "supersample", g.supersample);
  g.gt_samples = c.get_int("gen", "gt_samples", g.gt_samples);
  g.camera_radius = c.get_double("gen", "camera_radius", g.camera_radius);
  g.camera_angle_x = c.get_double("gen", "camera_angle_x", g.camera_angle_x);
  g.elevation_deg = c.get_double("gen", "elevation_deg", g.elevation_deg);
  g.znear = c.get_double("gen", "znear", g.znear);
  g.zfar = c.get_double("gen", "zfar", g.zfar);
  g.floor_b = c.get_double("gen", "floor_b", g.floor_b);
  g.thresholds.c_pos = c.get_double("gen", "c_pos", g.thresholds.c_pos);
  g.thresholds.c_neg = c.get_double("gen", "c_neg", g.thresholds.c_neg);
  g.val_azimuths = c.get_doubles("gen", "val_azimuths", g.val_azimuths);
  g.threads = c.get_int("gen", "threads", g.threads);
  return g;
}

}  // namespace evrf::io
