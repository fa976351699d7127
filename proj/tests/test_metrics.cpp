#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "evrf/io.hpp"
#include "evrf/metrics.hpp"
#include "evrf/rng.hpp"
#include "evrf/synth.hpp"

using namespace evrf;
using namespace evrf::metrics;

namespace {

events::DeltaLFrame frame_of(int w, int h, double fill = 0.0) {
  events::DeltaLFrame f(w, h, {0.0, 1.0});
  for (double& v : f.values()) v = fill;
  return f;
}

// Random frames whose entries are dyadic multiples (exact float sums).
events::DeltaLFrame dyadic_frame(int w, int h, Rng& rng) {
  events::DeltaLFrame f(w, h, {0.0, 1.0});
  for (double& v : f.values()) v = static_cast<double>(static_cast<int>(rng.below(129)) - 64) / 64.0;
  return f;
}

}  // namespace

TEST_CASE("psnr") {
  Rng rng(1);
  events::DeltaLFrame gt = dyadic_frame(20, 20, rng);

  SUBCASE("identical frames hit the sentinel") {
    CHECK(psnr_event_frame(gt, gt).value() == kPsnrSentinel);
  }
  SUBCASE("uniform error of range/10 is exactly 20 dB") {
    const auto [lo, hi] = std::minmax_element(gt.values().begin(), gt.values().end());
    const double range = *hi - *lo;
    events::DeltaLFrame pred = gt;
    for (double& v : pred.values()) v += range / 10.0;
    CHECK(psnr_event_frame(pred, gt).value() == doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("doubling the error costs about 6.02 dB") {
    events::DeltaLFrame p1 = gt, p2 = gt;
    Rng noise(2);
    for (std::size_t i = 0; i < p1.values().size(); ++i) {
      double e = noise.uniform(-0.1, 0.1);
      p1.values()[i] += e;
      p2.values()[i] += 2.0 * e;
    }
    double d = psnr_event_frame(p1, gt).value() - psnr_event_frame(p2, gt).value();
    CHECK(d == doctest::Approx(6.0206).epsilon(1e-3));
  }
  SUBCASE("constant ground truth is flagged undefined") {
    events::DeltaLFrame flat = frame_of(8, 8, 0.3);
    CHECK(!psnr_event_frame(flat, flat).has_value());
  }
  SUBCASE("PSNR and MAE are exactly permutation invariant") {
    events::DeltaLFrame pred = dyadic_frame(20, 20, rng);
    double p0 = psnr_event_frame(pred, gt).value();
    double m0 = mae_event_frame(pred, gt, events::Thresholds{});
    // Reverse both frames: same multiset of (pred, gt) pairs.
    events::DeltaLFrame pred_r = pred, gt_r = gt;
    std::reverse(pred_r.values().begin(), pred_r.values().end());
    std::reverse(gt_r.values().begin(), gt_r.values().end());
    CHECK(psnr_event_frame(pred_r, gt_r).value() == p0);
    CHECK(mae_event_frame(pred_r, gt_r, events::Thresholds{}) == m0);
  }
}

TEST_CASE("ssim") {
  Rng rng(3);
  events::DeltaLFrame gt = dyadic_frame(24, 24, rng);

  SUBCASE("identical frames score 1") {
    CHECK(ssim_event_frame(gt, gt) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("anticorrelated zero-mean frames score negative") {
    events::DeltaLFrame a(16, 16, {0.0, 1.0});
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) a.at(x, y) = ((x + y) % 2 ? 1.0 : -1.0) * (0.5 + 0.1 * ((x * 7 + y) % 5));
    events::DeltaLFrame b = a;
    for (double& v : b.values()) v = -v;
    CHECK(ssim_event_frame(b, a) < 0.0);
  }
  SUBCASE("constant shift keeps structure but loses luminance") {
    events::DeltaLFrame shifted = gt;
    const auto [lo, hi] = std::minmax_element(gt.values().begin(), gt.values().end());
    const double range = *hi - *lo;
    for (double& v : shifted.values()) v += 0.25 * range;
    const double score = ssim_event_frame(shifted, gt, range);

    // Per-term oracle with the same 11x11 Gaussian weighting: for a constant
    // shift the contrast and structure terms are exactly 1, so the score must
    // equal the mean luminance term, strictly below 1.
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const double c3 = c2 / 2.0;
    double kernel[11][11], ksum = 0.0;
    for (int i = 0; i < 11; ++i)
      for (int j = 0; j < 11; ++j) {
        const double dy = i - 5.0, dx = j - 5.0;
        kernel[i][j] = std::exp(-(dx * dx + dy * dy) / 4.5);
        ksum += kernel[i][j];
      }
    double lum_total = 0.0, struct_total = 0.0;
    int windows = 0;
    for (int y = 0; y + 11 <= gt.height(); ++y)
      for (int x = 0; x + 11 <= gt.width(); ++x) {
        double mp = 0, mg = 0, pp = 0, gg = 0, pg = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double w = kernel[i][j] / ksum;
            const double p = shifted.at(x + j, y + i), q = gt.at(x + j, y + i);
            mp += w * p;
            mg += w * q;
            pp += w * p * p;
            gg += w * q * q;
            pg += w * p * q;
          }
        const double sp = std::sqrt(std::max(pp - mp * mp, 0.0));
        const double sg = std::sqrt(std::max(gg - mg * mg, 0.0));
        const double cov = pg - mp * mg;
        lum_total += (2 * mp * mg + c1) / (mp * mp + mg * mg + c1);
        struct_total += (cov + c3) / (sp * sg + c3);
        ++windows;
      }
    CHECK(struct_total / windows == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(lum_total / windows < 1.0);
    CHECK(score == doctest::Approx(lum_total / windows).epsilon(1e-6));
    CHECK(score < 1.0);
  }
  SUBCASE("rigid translation of both frames far from borders preserves the score") {
    events::DeltaLFrame a_gt = frame_of(44, 44), a_pred = frame_of(44, 44);
    events::DeltaLFrame b_gt = frame_of(44, 44), b_pred = frame_of(44, 44);
    Rng noise(7);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x) {
        const double dx = x - 3.0, dy = y - 3.0;
        const double p = std::exp(-(dx * dx + dy * dy) / 8.0);
        const double n = noise.uniform(-0.2, 0.2);
        a_gt.at(15 + x, 15 + y) = p;
        a_pred.at(15 + x, 15 + y) = p + n;
        b_gt.at(18 + x, 18 + y) = p;
        b_pred.at(18 + x, 18 + y) = p + n;
      }
    CHECK(ssim_event_frame(a_pred, a_gt, 1.0) ==
          doctest::Approx(ssim_event_frame(b_pred, b_gt, 1.0)).epsilon(1e-12));
  }
  SUBCASE("frames smaller than the window are rejected") {
    events::DeltaLFrame small_frame = frame_of(8, 8);
    CHECK_THROWS_AS(ssim_event_frame(small_frame, small_frame), ArgumentError);
  }
}

TEST_CASE("mae on quantized counts") {
  events::Thresholds thr{0.2, -0.2};
  events::DeltaLFrame gt = frame_of(10, 10);
  SUBCASE("identical frames give zero") {
    CHECK(mae_event_frame(gt, gt, thr) == 0.0);
  }
  SUBCASE("one pixel off by two events in a 100-pixel frame") {
    events::DeltaLFrame pred = gt;
    pred.at(3, 3) = 0.4;  // two positive events
    CHECK(mae_event_frame(pred, gt, thr) == doctest::Approx(0.02));
  }
  SUBCASE("sub-threshold noise is absorbed by quantization") {
    events::DeltaLFrame noisy = gt;
    Rng rng(4);
    for (double& v : noisy.values()) v += rng.uniform(-0.19, 0.19);
    CHECK(mae_event_frame(noisy, gt, thr) == 0.0);
    CHECK(mae_event_frame(events::filter_event_frame(noisy, 0.2), gt, thr) == 0.0);
  }
}

TEST_CASE("evaluate writes a full report against a trained-ish model") {
  // Dataset + untrained model: exercises plumbing, sentinel paths, and files.
  auto dir = std::filesystem::temp_directory_path() / "evrf_test_eval_ds";
  if (!std::filesystem::exists(dir / "views.json")) {
    synth::GenConfig cfg;
    cfg.width = 16;
    cfg.height = 16;
    cfg.n_views = 2;
    cfg.n_frames = 4;
    cfg.supersample = 2;
    cfg.gt_samples = 24;
    synth::gen_dataset(synth::translating_sphere_scene(), cfg, dir.string());
  }
  io::Dataset ds = io::load_dataset(dir, 2.0, 9.0);

  render::ModelConfig mc;
  mc.deform_depth = 3;
  mc.deform_width = 8;
  mc.canonical_depth = 3;
  mc.canonical_width = 8;
  mc.x_freqs = 2;
  mc.t_freqs = 2;
  mc.d_freqs = 2;
  mc.use_viewdirs = false;
  mc.samples = 8;
  Rng rng(5);
  render::SceneModel model = render::make_scene_model(mc, rng);

  auto out = std::filesystem::temp_directory_path() / "evrf_test_eval_out";
  std::filesystem::remove_all(out);
  EvalConfig ec;
  ec.windows = {{0.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}, {1.5, 1.6}};  // last one: no ground truth
  ec.out_dir = out;
  ec.png_cap = 4;
  EvalReport report = evaluate(model, ds, ec);

  CHECK(report.entries.size() == 2 * 3);
  int skipped = 0;
  for (const auto& e : report.entries) skipped += e.skipped ? 1 : 0;
  CHECK(skipped == 2);  // the out-of-span window per view
  CHECK(report.mean_psnr.has_value());
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "report.csv"));
  bool found_png = false;
  for (const auto& entry : std::filesystem::directory_iterator(out / "frames"))
    if (entry.path().extension() == ".png") found_png = true;
  CHECK(found_png);
}

TEST_CASE("event frame png roundtrips counts up to the cap") {
  const int cap = 8;
  events::EventCountFrame frame{17, 5, {0.0, 1.0}, {}};
  frame.counts.resize(17 * 5, 0);
  for (int i = -cap; i <= cap; ++i) frame.counts[static_cast<std::size_t>(i + cap)] = i;
  frame.counts[80] = 37;  // saturates

  auto path = std::filesystem::temp_directory_path() / "evrf_test_evframe.png";
  io::write_png(io::event_frame_to_rgb(frame, cap), path);
  io::Rgb8Image back = io::read_png(path);
  events::EventCountFrame decoded = io::rgb_to_event_frame(back, cap);
  for (int i = -cap; i <= cap; ++i) CHECK(decoded.counts[static_cast<std::size_t>(i + cap)] == i);
  CHECK(decoded.counts[80] == cap);
}
