#pragma once

#include <optional>

#include "evrf/dataset.hpp"
#include "evrf/render.hpp"

namespace evrf::metrics {

// Peak signal-to-noise ratio in dB against the ground-truth value range
// (range = max - min over the ground-truth set). Zero MSE reports the 99 dB
// sentinel; zero range is undefined and reported as nullopt.
inline constexpr double kPsnrSentinel = 99.0;
std::optional<double> psnr_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                                       std::optional<double> range = std::nullopt);

// Mean structural similarity, 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range from the ground truth unless given.
double ssim_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                        std::optional<double> range = std::nullopt);

// Mean absolute error in whole event counts (both frames quantized first).
double mae_event_frame(const events::DeltaLFrame& pred, const events::DeltaLFrame& gt,
                       const events::Thresholds& thresholds);

struct EvalEntry {
  std::size_t view = 0;
  events::TimeWindow window;
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> mae;
  bool skipped = false;  // no ground truth available
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  std::optional<double> mean_psnr, median_psnr;
  std::optional<double> mean_ssim, mean_mae;
  double gt_range = 0.0;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::string> notes;
};

struct EvalConfig {
  std::vector<events::TimeWindow> windows;
  std::vector<std::size_t> views;          // dataset view indices; empty = validation views
  double filter_min = 0.0;                 // zero sub-threshold predictions before scoring
  int png_cap = 8;                         // event-frame PNG saturation cap
  std::optional<std::filesystem::path> out_dir;  // write report + frame images when set
  // Qualitative-only renders along a camera path (pose, window) — no metrics.
  std::vector<std::pair<Eigen::Matrix4d, events::TimeWindow>> camera_path;
  int threads = 0;
};

// Renders predicted event frames for every (view, window) pair, scores them
// against frames reconstructed from the recorded streams, and (optionally)
// writes report JSON/CSV plus red/blue event-frame PNGs.
EvalReport evaluate(const render::SceneModel& model, const io::Dataset& dataset, const EvalConfig& config);

// Predicted per-pixel delta-L frame for one full view.
events::DeltaLFrame render_delta_l_frame(const render::SceneModel& model, const render::Camera& camera,
                                         const events::TimeWindow& window);

// Mean held-out PSNR at the given windows; the training-progress measure.
std::optional<double> validation_psnr(const render::SceneModel& model, const io::Dataset& dataset,
                                      const std::vector<events::TimeWindow>& windows,
                                      const std::vector<std::size_t>& views, int threads = 0);

}  // namespace evrf::metrics
