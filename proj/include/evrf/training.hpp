#pragma once

#include <optional>

#include "evrf/adam.hpp"
#include "evrf/checkpoint.hpp"
#include "evrf/dataset.hpp"
#include "evrf/render.hpp"

namespace evrf::train {

struct TrainConfig {
  int total_iterations = 20000;
  int rays_per_iteration = 1024;
  double positive_fraction = 0.5;  // share of rays cast through event pixels
  double lr = 5e-4;
  int lr_warmup = 100;                          // linear warm-up span, iterations
  int crop_iterations = 200;                    // event-centered crop phase
  double crop_pad = 0.1;                        // crop rectangle padding fraction
  int progressive_iterations = 2000;            // timestep introduction span
  std::vector<int> halving_milestones = {10000, 15000};
  std::optional<events::Thresholds> thresholds;  // defaults to the dataset's
  std::uint64_t seed = 1;
  int checkpoint_every = 5000;
  int log_every = 10;
  int chunk_rays = 128;  // rays per tape; fixed so reductions are thread-count invariant
  int threads = 0;       // 0 = hardware concurrency
  bool deterministic = true;
  nn::AdamConfig adam;
  render::ModelConfig model;

  void validate() const;
};

struct CropRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

struct ScheduleState {
  std::int64_t iteration = 0;  // last completed iteration (1-based while running)
  std::vector<double> window_edges;
  int admissible_windows = 1;
  double lr = 0.0;
  bool crop_active = false;
};

// Supervision frames for the current window partition, per train view.
struct TargetSet {
  std::vector<double> edges;
  std::vector<std::vector<events::DeltaLFrame>> frames;        // [window][view]
  std::vector<std::vector<std::vector<std::int32_t>>> nonzero;  // pixel indices with events

  void rebuild(const std::vector<const events::EventStream*>& streams, std::vector<double> new_edges);
};

struct RaySample {
  int view = 0;
  int pixel = 0;
};

// Dead-zone interval for one target: zero loss while the prediction stays
// inside the quantization bin, squared distance to the bin center outside.
struct DeadzoneTerm {
  double center = 0.0;
  bool inside = false;
};
DeadzoneTerm deadzone_term(double pred, double target, const events::Thresholds& thr);

// Mean dead-zone loss over aligned prediction/target spans.
double deadzone_loss(std::span<const double> pred, std::span<const double> target,
                     const events::Thresholds& thr);

// ceil(n * positive_fraction) draws from event pixels across all views, the
// remainder uniform over (cropped) pixels of a uniformly drawn view. Falls
// back to fully random sampling when no event pixels exist.
std::vector<RaySample> sample_rays(const std::vector<const events::DeltaLFrame*>& frames,
                                   const std::vector<const std::vector<std::int32_t>*>& nonzero,
                                   int n, double positive_fraction, const std::vector<CropRect>* crops,
                                   Rng& rng, bool* fell_back = nullptr);

// Advances the schedule to `state.iteration + 1`: warm-up learning rate, crop
// phase, progressive timestep admission, window halving at each milestone
// (targets are rebuilt when edges change).
void schedule_tick(ScheduleState& state, const TrainConfig& config, TargetSet& targets,
                   const std::vector<const events::EventStream*>& streams);

struct StepStats {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  double window_width = 0.0;
  int window = 0;
};

// One training run over a fixed dataset. Deterministic given (config, seed):
// all per-iteration randomness is keyed on the iteration index.
class Trainer {
 public:
  Trainer(TrainConfig config, io::Dataset dataset, render::SceneModel model,
          std::optional<nn::AdamState> adam = std::nullopt,
          std::optional<io::ScheduleSnapshot> schedule = std::nullopt);

  StepStats step();

  const render::SceneModel& model() const { return model_; }
  const ScheduleState& schedule() const { return schedule_; }
  const io::Dataset& dataset() const { return dataset_; }
  const TrainConfig& config() const { return config_; }
  const nn::AdamState& adam() const { return adam_; }
  const events::Thresholds& thresholds() const { return thresholds_; }
  bool sampling_fell_back() const { return fell_back_; }

  io::Checkpoint make_checkpoint() const;

 private:
  TrainConfig config_;
  io::Dataset dataset_;
  render::SceneModel model_;
  nn::AdamState adam_;
  ScheduleState schedule_;
  TargetSet targets_;
  events::Thresholds thresholds_;
  std::vector<std::size_t> train_view_ids_;
  std::vector<const events::EventStream*> train_streams_;
  std::vector<CropRect> crops_;
  Rng master_;
  bool fell_back_ = false;
};

struct FitResult {
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
  double final_loss = 0.0;
};

// Full training loop: schedule + steps + periodic checkpoints + CSV loss log
// (iteration, lr, window_width, loss) + run manifest under `out_dir`.
FitResult fit(const TrainConfig& config, const io::Dataset& dataset, const std::filesystem::path& out_dir,
              std::optional<io::Checkpoint> init = std::nullopt);

// Continues from a checkpoint on a new dataset; optimizer moments are
// restored when present and the schedule restarts (warm-up reapplied).
// Throws ArgumentError when the checkpoint architecture does not match.
FitResult finetune(const std::filesystem::path& checkpoint_path, const TrainConfig& config,
                   const io::Dataset& dataset, const std::filesystem::path& out_dir);

}  // namespace evrf::train
