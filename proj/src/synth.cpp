#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "evrf/dataset.hpp"
#include "evrf/io.hpp"
#include "evrf/synth.hpp"

namespace evrf::synth {

Eigen::Isometry3d Primitive::pose_at(double t) const {
  if (track.empty()) return Eigen::Isometry3d::Identity();
  if (track.size() == 1 || t <= track.front().t) {
    Eigen::Isometry3d p = Eigen::Isometry3d::Identity();
    p.translate(track.front().position);
    p.rotate(track.front().rotation);
    return p;
  }
  if (t >= track.back().t) {
    Eigen::Isometry3d p = Eigen::Isometry3d::Identity();
    p.translate(track.back().position);
    p.rotate(track.back().rotation);
    return p;
  }
  std::size_t hi = 1;
  while (track[hi].t < t) ++hi;
  const Keyframe& a = track[hi - 1];
  const Keyframe& b = track[hi];
  const double u = (t - a.t) / (b.t - a.t);
  Eigen::Isometry3d p = Eigen::Isometry3d::Identity();
  p.translate(((1.0 - u) * a.position + u * b.position).eval());
  p.rotate(a.rotation.slerp(u, b.rotation));
  return p;
}

void AnalyticScene::validate(int t_steps) const {
  if (primitives.empty()) return;
  const double half = 0.5 * bounds;
  for (const Primitive& prim : primitives) {
    const double reach = prim.shape == Primitive::Shape::kSphere ? prim.size : prim.size * std::sqrt(3.0);
    for (int i = 0; i < t_steps; ++i) {
      const double t = static_cast<double>(i) / (t_steps - 1);
      const Eigen::Vector3d c = prim.pose_at(t).translation();
      for (int axis = 0; axis < 3; ++axis)
        if (std::abs(c[axis]) + reach > half)
          throw ArgumentError("scene: primitive leaves the bounding box at t=" + std::to_string(t));
    }
  }
}

void AnalyticScene::query(const Mat& points, double t, Eigen::VectorXd& intensity,
                          Eigen::VectorXd& density) const {
  const Eigen::Index n = points.rows();
  intensity = Eigen::VectorXd::Zero(n);
  density = Eigen::VectorXd::Zero(n);

  std::vector<Eigen::Isometry3d> inv_poses;
  inv_poses.reserve(primitives.size());
  for (const Primitive& prim : primitives) inv_poses.push_back(prim.pose_at(t).inverse());

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = points.row(i).transpose();
    for (std::size_t k = 0; k < primitives.size(); ++k) {
      const Primitive& prim = primitives[k];
      const Eigen::Vector3d local = inv_poses[k] * p;
      const bool inside = prim.shape == Primitive::Shape::kSphere
                              ? local.squaredNorm() <= prim.size * prim.size
                              : local.cwiseAbs().maxCoeff() <= prim.size;
      if (inside) {
        intensity[i] = prim.albedo;
        density[i] = prim.density;
        break;
      }
    }
  }
}

render::FieldFn AnalyticScene::field() const {
  return [this](const Mat& points, const Mat&, double t, Eigen::VectorXd& intensity,
                Eigen::VectorXd& density) { query(points, t, intensity, density); };
}

Image gt_render(const AnalyticScene& scene, const Camera& camera, double t, int samples, Rng* jitter) {
  render::RenderOptions opts;
  opts.samples = samples;
  opts.with_dirs = false;
  opts.jitter = jitter;
  return render::render_field_image(scene.field(), camera, t, opts);
}

namespace {

AnalyticScene single_primitive_scene(Primitive::Shape shape, double size, double albedo, double density,
                                     const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  AnalyticScene scene;
  Primitive prim;
  prim.shape = shape;
  prim.size = size;
  prim.albedo = albedo;
  prim.density = density;
  prim.track = {Keyframe{0.0, from, Eigen::Quaterniond::Identity()},
                Keyframe{1.0, to, Eigen::Quaterniond::Identity()}};
  scene.primitives.push_back(std::move(prim));
  scene.validate();
  return scene;
}

}  // namespace

AnalyticScene translating_sphere_scene(double radius, double albedo, double density,
                                       const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  return single_primitive_scene(Primitive::Shape::kSphere, radius, albedo, density, from, to);
}

AnalyticScene translating_box_scene(double half_extent, double albedo, double density,
                                    const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  return single_primitive_scene(Primitive::Shape::kBox, half_extent, albedo, density, from, to);
}

AnalyticScene scene_from_preset(const std::string& name) {
  if (name == "translating_sphere") return translating_sphere_scene();
  if (name == "translating_box") return translating_box_scene();
  if (name == "vertical_sphere")
    return translating_sphere_scene(0.6, 0.85, 50.0, {0.0, 0.0, -1.0}, {0.0, 0.0, 1.0});
  if (name == "static_sphere") return translating_sphere_scene(0.6, 0.85, 50.0, {0, 0, 0}, {0, 0, 0});
  if (name == "two_spheres") {
    AnalyticScene scene = translating_sphere_scene(0.45, 0.9, 50.0, {-1.0, -0.6, 0.0}, {1.0, -0.6, 0.0});
    Primitive second;
    second.shape = Primitive::Shape::kSphere;
    second.size = 0.35;
    second.albedo = 0.6;
    second.density = 50.0;
    second.track = {Keyframe{0.0, {0.0, 0.7, -0.8}, Eigen::Quaterniond::Identity()},
                    Keyframe{1.0, {0.0, 0.7, 0.8}, Eigen::Quaterniond::Identity()}};
    scene.primitives.push_back(std::move(second));
    scene.validate();
    return scene;
  }
  throw ArgumentError("unknown scene preset: " + name);
}

void gen_dataset(const AnalyticScene& scene, const GenConfig& config, const std::string& out_dir) {
  if (config.n_views < 1) throw ArgumentError("gen: need at least one view");
  if (config.n_frames < 2) throw ArgumentError("gen: need at least two frames");
  if (config.supersample < 1) throw ArgumentError("gen: supersample factor must be >= 1");
  scene.validate();
  config.thresholds.validate();

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "frames");

  // Training ring at equal spacing; validation ring offset by half the
  // spacing unless explicit azimuths were requested.
  const double spacing = 360.0 / config.n_views;
  std::vector<std::pair<double, bool>> azimuths;  // (azimuth, validation)
  for (int i = 0; i < config.n_views; ++i) azimuths.emplace_back(i * spacing, false);
  if (config.val_azimuths.empty()) {
    for (int i = 0; i < config.n_views; ++i) azimuths.emplace_back(i * spacing + 0.5 * spacing, true);
  } else {
    for (double az : config.val_azimuths) azimuths.emplace_back(az, true);
  }

  std::vector<io::ViewRecord> records(azimuths.size());
  const int total_steps = (config.n_frames - 1) * config.supersample + 1;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (std::size_t v = next.fetch_add(1); v < azimuths.size(); v = next.fetch_add(1)) {
      if (failed.load()) return;
      try {
        const auto [azimuth, validation] = azimuths[v];
        Camera camera = Camera::from_angle_x(config.width, config.height, config.camera_angle_x,
                                             render::orbit_pose(azimuth, config.elevation_deg, config.camera_radius),
                                             config.znear, config.zfar);
        io::ViewRecord& rec = records[v];
        rec.transform = camera.cam_to_world;
        rec.validation = validation;
        rec.azimuth_deg = azimuth;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "view_%03zu.evd1", v);
        rec.events_file = buf;

        const std::size_t n_px = static_cast<std::size_t>(config.width) * config.height;
        std::vector<double> log_prev(n_px), log_next(n_px), ref(n_px);
        std::vector<events::Event> all_events;

        for (int step = 0; step < total_steps; ++step) {
          const double t = static_cast<double>(step) / (total_steps - 1);
          Image frame = gt_render(scene, camera, t, config.gt_samples);
          for (std::size_t i = 0; i < n_px; ++i) log_next[i] = std::log(frame.values[i] + config.floor_b);
          if (step == 0) {
            ref = log_next;
          } else {
            const double t_prev = static_cast<double>(step - 1) / (total_steps - 1);
            auto evs = events::generate_events(log_prev, log_next, ref, config.width, config.height,
                                               config.thresholds, t_prev, t);
            all_events.insert(all_events.end(), evs.begin(), evs.end());
          }
          std::swap(log_prev, log_next);

          if (step % config.supersample == 0) {
            const int frame_idx = step / config.supersample;
            std::snprintf(buf, sizeof(buf), "frames/view_%03zu_t%03d.pgm", v, frame_idx);
            io::write_pgm16(frame, fs::path(out_dir) / buf);
            rec.frames.emplace_back(t, buf);
          }
        }

        events::EventStream stream(config.width, config.height, config.thresholds, std::move(all_events));
        io::write_events(stream, fs::path(out_dir) / rec.events_file);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error_message = e.what();
        failed.store(true);
      }
    }
  };

  int n_threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(azimuths.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load()) throw Error("gen_dataset: " + error_message);

  io::write_views_json(fs::path(out_dir) / "views.json", config.camera_angle_x, config.width, config.height,
                       config.thresholds, records);
}

}  // namespace evrf::synth
