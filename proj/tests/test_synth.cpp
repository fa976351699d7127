#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "evrf/dataset.hpp"
#include "evrf/io.hpp"
#include "evrf/synth.hpp"

using namespace evrf;
using namespace evrf::synth;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("evrf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("gt_query basics") {
  AnalyticScene scene = translating_sphere_scene(0.5, 0.8, 40.0, {0, 0, 0}, {0, 0, 0});
  Mat inside(1, 3), outside(1, 3);
  inside << 0.2, 0.1, -0.2;
  outside << 1.4, 0.0, 0.0;
  Eigen::VectorXd c, s;
  for (double t : {0.0, 0.33, 1.0}) {
    scene.query(inside, t, c, s);
    CHECK(c[0] == 0.8);
    CHECK(s[0] == 40.0);
    scene.query(outside, t, c, s);
    CHECK(c[0] == 0.0);
    CHECK(s[0] == 0.0);
  }
}

TEST_CASE("gt_query rigid-motion identity for a translating sphere") {
  AnalyticScene scene = translating_sphere_scene(0.5, 0.8, 40.0, {0, 0, 0}, {1, 0, 0});
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = rng.uniform();
    Mat p(1, 3), p0(1, 3);
    for (int d = 0; d < 3; ++d) p(0, d) = rng.uniform(-1.8, 1.8);
    p0 = p;
    p0(0, 0) -= t;  // undo the +x unit-speed translation
    Eigen::VectorXd c_t, s_t, c_0, s_0;
    scene.query(p, t, c_t, s_t);
    scene.query(p0, 0.0, c_0, s_0);
    CHECK(c_t[0] == c_0[0]);
    CHECK(s_t[0] == s_0[0]);
  }
}

TEST_CASE("scene validation rejects escapes") {
  CHECK_THROWS_AS(translating_sphere_scene(0.6, 0.8, 40.0, {-3.0, 0, 0}, {0, 0, 0}), ArgumentError);
}

TEST_CASE("gt_render silhouette radius matches projection geometry") {
  const double radius = 0.8;
  AnalyticScene scene = translating_sphere_scene(radius, 0.9, 200.0, {0, 0, 0}, {0, 0, 0});
  const int res = 64;
  const double cam_dist = 5.0;
  render::Camera cam = render::Camera::from_angle_x(res, res, 0.8, render::orbit_pose(0.0, 0.0, cam_dist),
                                                    2.0, 8.0);
  Image img = gt_render(scene, cam, 0.5, 128);

  // Closed-form: angular radius asin(r/d); projected pixel radius fx * tan(...)
  const double fx = 0.5 * res / std::tan(0.4);
  const double pixel_radius = fx * std::tan(std::asin(radius / cam_dist));

  // Measure along the central row (camera at elevation 0 looks through the center).
  const int cy = res / 2;
  int lit = 0;
  for (int x = 0; x < res; ++x)
    if (img.at(x, cy) > 0.45) ++lit;
  const double measured_radius = lit / 2.0;
  CHECK(std::abs(measured_radius - pixel_radius) <= 1.0);

  SUBCASE("empty scene renders black") {
    AnalyticScene empty;
    Image black = gt_render(empty, cam, 0.0, 32);
    for (double v : black.values) CHECK(v == 0.0);
  }
  SUBCASE("repeat render is bit-identical without jitter") {
    Image again = gt_render(scene, cam, 0.5, 128);
    for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(again.values[i] == img.values[i]);
  }
}

TEST_CASE("gen_dataset layout, geometry, and event/frame consistency") {
  auto dir = temp_dir("gen");
  AnalyticScene scene = translating_sphere_scene();
  GenConfig cfg;
  cfg.width = 24;
  cfg.height = 24;
  cfg.n_views = 4;
  cfg.n_frames = 6;
  cfg.supersample = 4;
  cfg.gt_samples = 48;
  synth::gen_dataset(scene, cfg, dir.string());

  io::Dataset ds = io::load_dataset(dir, 2.0, 9.0);
  CHECK(ds.views.size() == 8);  // 4 train + 4 val (half-spacing offset)
  CHECK(ds.train_views().size() == 4);
  CHECK(ds.val_views().size() == 4);
  CHECK(ds.frame_times.size() == 6);

  SUBCASE("adjacent training azimuths differ by the ring spacing") {
    auto train = ds.train_views();
    for (std::size_t i = 0; i + 1 < train.size(); ++i)
      CHECK(ds.views[train[i + 1]].azimuth_deg - ds.views[train[i]].azimuth_deg ==
            doctest::Approx(90.0));
    CHECK(ds.views[ds.val_views()[0]].azimuth_deg - ds.views[train[0]].azimuth_deg ==
          doctest::Approx(45.0));  // half the spacing
  }

  SUBCASE("every view and frame file exists") {
    for (const auto& v : ds.views) CHECK(std::filesystem::exists(dir / v.events_path));
    CHECK(std::filesystem::exists(dir / "frames" / "view_000_t000.pgm"));
    CHECK(std::filesystem::exists(dir / "frames" / "view_007_t005.pgm"));
  }

  SUBCASE("events reconstruct the stored frame differences within one quantum") {
    for (std::size_t vi : {std::size_t{0}, std::size_t{5}}) {
      const auto& view = ds.views[vi];
      for (int k = 0; k + 1 < 6; ++k) {
        char a[64], b[64];
        std::snprintf(a, sizeof(a), "frames/view_%03zu_t%03d.pgm", vi, k);
        std::snprintf(b, sizeof(b), "frames/view_%03zu_t%03d.pgm", vi, k + 1);
        Image f0 = io::read_pgm16(dir / a);
        Image f1 = io::read_pgm16(dir / b);
        events::TimeWindow w{ds.frame_times[k], ds.frame_times[k + 1]};
        auto slices = events::slice_stream(view.stream, std::vector<double>{w.t0, w.t1});
        events::DeltaLFrame frame = events::events_to_delta_l(slices[0], w);
        for (int i = 0; i < 24 * 24; ++i) {
          const double truth = std::log(f1.values[i] + cfg.floor_b) - std::log(f0.values[i] + cfg.floor_b);
          const double err = std::abs(frame.values()[i] - truth);
          // One quantum plus the 16-bit PGM quantization of the log values.
          CHECK(err < std::max(cfg.thresholds.c_pos, -cfg.thresholds.c_neg) + 0.05);
        }
      }
    }
  }
}

TEST_CASE("static scene generates empty streams") {
  auto dir = temp_dir("gen_static");
  AnalyticScene scene = scene_from_preset("static_sphere");
  GenConfig cfg;
  cfg.width = 16;
  cfg.height = 16;
  cfg.n_views = 2;
  cfg.n_frames = 4;
  cfg.supersample = 2;
  cfg.gt_samples = 32;
  synth::gen_dataset(scene, cfg, dir.string());
  io::Dataset ds = io::load_dataset(dir, 2.0, 9.0);
  for (const auto& v : ds.views) CHECK(v.stream.empty());
}

TEST_CASE("diametrically opposite views of an axisymmetric scene see equal event counts") {
  auto dir = temp_dir("gen_sym");
  AnalyticScene scene = scene_from_preset("vertical_sphere");
  GenConfig cfg;
  cfg.width = 32;
  cfg.height = 32;
  cfg.n_views = 4;
  cfg.n_frames = 8;
  cfg.supersample = 4;
  cfg.gt_samples = 64;
  cfg.elevation_deg = 10.0;
  synth::gen_dataset(scene, cfg, dir.string());
  io::Dataset ds = io::load_dataset(dir, 2.0, 9.0);
  auto train = ds.train_views();
  const double n0 = static_cast<double>(ds.views[train[0]].stream.size());
  const double n2 = static_cast<double>(ds.views[train[2]].stream.size());
  REQUIRE(n0 > 0);
  CHECK(std::abs(n0 - n2) / n0 < 0.02);
}
