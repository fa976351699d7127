#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "evrf/io.hpp"
#include "evrf/metrics.hpp"

namespace evrf::metrics {

namespace {

void check_same_shape(const events::DeltaLFrame& a, const events::DeltaLFrame& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw ArgumentError("metrics: frame shapes differ");
}

double frame_range(const events::DeltaLFrame& gt) {
  const auto [lo, hi] = std::minmax_element(gt.values().begin(), gt.values().end());
  return *hi - *lo;
}

}  // namespace

std::optional<double> psnr_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                                       std::optional<double> range) {
  check_same_shape(pred, gt);
  const double r = range.value_or(frame_range(gt));
  if (!(r > 0.0)) return std::nullopt;
  double mse = 0.0;
  for (std::size_t i = 0; i < gt.values().size(); ++i) {
    const double d = pred.values()[i] - gt.values()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(gt.values().size());
  if (mse == 0.0) return kPsnrSentinel;
  return std::min(kPsnrSentinel, 10.0 * std::log10(r * r / mse));
}

double ssim_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                        std::optional<double> range) {
  check_same_shape(pred, gt);
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  if (gt.width() < kWindow || gt.height() < kWindow)
    throw ArgumentError("ssim: frame smaller than the 11x11 window");

  const double r = range.value_or(frame_range(gt));
  const double c1 = (0.01 * r) * (0.01 * r);
  const double c2 = (0.03 * r) * (0.03 * r);

  double kernel[kWindow][kWindow];
  double ksum = 0.0;
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) {
      const double dy = i - (kWindow - 1) / 2.0;
      const double dx = j - (kWindow - 1) / 2.0;
      kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      ksum += kernel[i][j];
    }
  for (auto& row : kernel)
    for (double& k : row) k /= ksum;

  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y + kWindow <= gt.height(); ++y) {
    for (int x = 0; x + kWindow <= gt.width(); ++x) {
      double mu_p = 0, mu_g = 0, pp = 0, gg = 0, pg = 0;
      for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
          const double w = kernel[i][j];
          const double p = pred.at(x + j, y + i);
          const double g = gt.at(x + j, y + i);
          mu_p += w * p;
          mu_g += w * g;
          pp += w * p * p;
          gg += w * g * g;
          pg += w * p * g;
        }
      const double var_p = pp - mu_p * mu_p;
      const double var_g = gg - mu_g * mu_g;
      const double cov = pg - mu_p * mu_g;
      total += ((2.0 * mu_p * mu_g + c1) * (2.0 * cov + c2)) /
               ((mu_p * mu_p + mu_g * mu_g + c1) * (var_p + var_g + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double mae_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                       const events::Thresholds& thresholds) {
  check_same_shape(pred, gt);
  events::EventCountFrame cp = events::count_events(pred, thresholds);
  events::EventCountFrame cg = events::count_events(gt, thresholds);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < cp.counts.size(); ++i)
    total += std::abs(static_cast<std::int64_t>(cp.counts[i]) - cg.counts[i]);
  return static_cast<double>(total) / static_cast<double>(cp.counts.size());
}

events::DeltaLFrame render_delta_l_frame(const render::SceneModel& model, const render::Camera& camera,
                                         const events::TimeWindow& window) {
  std::vector<render::Ray> rays = camera.all_rays();
  events::DeltaLFrame frame(camera.width, camera.height, window);
  const std::size_t block = static_cast<std::size_t>(camera.width) * 4;
  for (std::size_t off = 0; off < rays.size(); off += block) {
    const std::size_t count = std::min(block, rays.size() - off);
    Eigen::VectorXd dl = render::render_delta_l(
        model, std::span<const render::Ray>(rays.data() + off, count), window.t0, window.t1, nullptr);
    for (std::size_t i = 0; i < count; ++i) frame.values()[off + i] = dl[static_cast<Eigen::Index>(i)];
  }
  return frame;
}

namespace {

template <typename Fn>
void parallel_over(std::size_t n, int threads, Fn&& fn) {
  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(n)));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EvalReport evaluate(const render::SceneModel& model, const io::Dataset& dataset, const EvalConfig& config) {
  EvalReport report;
  std::vector<std::size_t> views = config.views.empty() ? dataset.val_views() : config.views;
  if (views.empty()) throw ArgumentError("evaluate: no views requested and dataset has no validation views");
  for (std::size_t v : views)
    if (v >= dataset.views.size()) throw ArgumentError("evaluate: view index out of range");

  struct Pair {
    std::size_t view;
    events::TimeWindow window;
    events::DeltaLFrame pred, gt;
    bool have_gt = false;
  };
  std::vector<Pair> pairs;
  for (std::size_t v : views)
    for (const events::TimeWindow& w : config.windows) pairs.push_back(Pair{v, w, {}, {}, false});

  parallel_over(pairs.size(), config.threads, [&](std::size_t i) {
    Pair& p = pairs[i];
    const io::DatasetView& view = dataset.views[p.view];
    p.pred = render_delta_l_frame(model, view.camera, p.window);
    if (config.filter_min > 0.0) p.pred = events::filter_event_frame(p.pred, config.filter_min);
    // Windows outside the recorded span have no ground truth: qualitative only.
    const bool in_span = dataset.frame_times.empty() ||
                         (p.window.t0 >= dataset.frame_times.front() - 1e-12 &&
                          p.window.t1 <= dataset.frame_times.back() + 1e-12);
    if (in_span) {
      const std::vector<double> edges{p.window.t0, p.window.t1};
      auto slices = events::slice_stream(view.stream, edges);
      p.gt = events::events_to_delta_l(slices[0], p.window);
      p.have_gt = true;
    }
  });

  // Ground-truth range over the whole evaluation set, as the PSNR reference.
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const Pair& p : pairs) {
    if (!p.have_gt) continue;
    for (double v : p.gt.values()) {
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  const double range = any ? hi - lo : 0.0;
  report.gt_range = range;

  std::vector<double> psnrs, ssims, maes;
  for (Pair& p : pairs) {
    EvalEntry entry;
    entry.view = p.view;
    entry.window = p.window;
    if (!p.have_gt) {
      entry.skipped = true;
    } else {
      entry.psnr = psnr_event_frame(p.pred, p.gt, range > 0.0 ? std::optional<double>(range) : std::nullopt);
      if (p.gt.width() >= 11 && p.gt.height() >= 11)
        entry.ssim = ssim_event_frame(p.pred, p.gt, range > 0.0 ? std::optional<double>(range) : std::nullopt);
      entry.mae = mae_event_frame(p.pred, p.gt, dataset.thresholds);
      if (entry.psnr) psnrs.push_back(*entry.psnr);
      if (entry.ssim) ssims.push_back(*entry.ssim);
      if (entry.mae) maes.push_back(*entry.mae);
    }
    report.entries.push_back(entry);
  }
  report.mean_psnr = mean_of(psnrs);
  report.mean_ssim = mean_of(ssims);
  report.mean_mae = mean_of(maes);
  if (!psnrs.empty()) {
    std::vector<double> sorted = psnrs;
    std::sort(sorted.begin(), sorted.end());
    report.median_psnr = sorted[sorted.size() / 2];
  }
  report.notes.push_back("PSNR/SSIM computed on raw delta-L values with the ground-truth range; "
                         "MAE computed on threshold-quantized event counts.");
  report.notes.push_back("LPIPS omitted: no pretrained perceptual network in this build.");

  if (config.out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(*config.out_dir / "frames");
    nlohmann::json doc;
    doc["gt_range"] = report.gt_range;
    doc["notes"] = report.notes;
    doc["png_cap"] = config.png_cap;
    doc["filter_min"] = config.filter_min;
    nlohmann::json entries = nlohmann::json::array();
    std::ofstream csv(*config.out_dir / "report.csv", std::ios::trunc);
    csv << "view,t0,t1,psnr,ssim,mae,skipped\n";
    csv.precision(10);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Pair& p = pairs[i];
      const EvalEntry& e = report.entries[i];
      nlohmann::json ej;
      ej["view"] = e.view;
      ej["t0"] = e.window.t0;
      ej["t1"] = e.window.t1;
      ej["skipped"] = e.skipped;
      if (e.psnr) ej["psnr"] = *e.psnr;
      if (e.ssim) ej["ssim"] = *e.ssim;
      if (e.mae) ej["mae"] = *e.mae;
      entries.push_back(ej);
      csv << e.view << ',' << e.window.t0 << ',' << e.window.t1 << ','
          << (e.psnr ? std::to_string(*e.psnr) : "") << ',' << (e.ssim ? std::to_string(*e.ssim) : "")
          << ',' << (e.mae ? std::to_string(*e.mae) : "") << ',' << (e.skipped ? 1 : 0) << '\n';

      char name[96];
      std::snprintf(name, sizeof(name), "frames/pred_v%02zu_%05.3f_%05.3f.png", p.view, p.window.t0,
                    p.window.t1);
      io::write_png(io::event_frame_to_rgb(events::count_events(p.pred, dataset.thresholds), config.png_cap),
                    *config.out_dir / name);
      if (p.have_gt) {
        std::snprintf(name, sizeof(name), "frames/gt_v%02zu_%05.3f_%05.3f.png", p.view, p.window.t0,
                      p.window.t1);
        io::write_png(io::event_frame_to_rgb(events::count_events(p.gt, dataset.thresholds), config.png_cap),
                      *config.out_dir / name);
      }
    }
    doc["entries"] = entries;
    if (report.mean_psnr) doc["mean_psnr"] = *report.mean_psnr;
    if (report.median_psnr) doc["median_psnr"] = *report.median_psnr;
    if (report.mean_ssim) doc["mean_ssim"] = *report.mean_ssim;
    if (report.mean_mae) doc["mean_mae"] = *report.mean_mae;
    nlohmann::json echo = nlohmann::json::array();
    for (const auto& [k, v] : report.config_echo) echo.push_back({{"key", k}, {"value", v}});
    doc["config"] = echo;

    // Qualitative camera-path renders (no ground truth, no metrics).
    int path_idx = 0;
    for (const auto& [pose, window] : config.camera_path) {
      render::Camera cam = render::Camera::from_angle_x(dataset.width, dataset.height,
                                                        dataset.camera_angle_x, pose,
                                                        model.config.znear, model.config.zfar);
      events::DeltaLFrame frame = render_delta_l_frame(model, cam, window);
      char name[96];
      std::snprintf(name, sizeof(name), "frames/path_%03d.png", path_idx++);
      io::write_png(io::event_frame_to_rgb(events::count_events(frame, dataset.thresholds), config.png_cap),
                    *config.out_dir / name);
    }
    std::ofstream out(*config.out_dir / "report.json", std::ios::trunc);
    out << doc.dump(1) << "\n";
  }
  return report;
}

std::optional<double> validation_psnr(const render::SceneModel& model, const io::Dataset& dataset,
                                      const std::vector<events::TimeWindow>& windows,
                                      const std::vector<std::size_t>& views, int threads) {
  EvalConfig cfg;
  cfg.windows = windows;
  cfg.views = views;
  cfg.threads = threads;
  EvalReport report = evaluate(model, dataset, cfg);
  return report.mean_psnr;
}

}  // namespace evrf::metrics
