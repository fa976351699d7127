#pragma once

#include <filesystem>
#include <optional>

#include "evrf/adam.hpp"
#include "evrf/scene_model.hpp"

namespace evrf::io {

// Schedule position stored alongside the weights; enough to resume a run
// exactly (all per-iteration randomness is keyed on seed + iteration).
struct ScheduleSnapshot {
  std::int64_t iteration = 0;
  std::vector<double> window_edges;
  int admissible_windows = 0;
  double lr = 0.0;
};

struct Checkpoint {
  render::SceneModel model;
  ScheduleSnapshot schedule;
  std::uint64_t seed = 0;
  std::optional<nn::AdamState> adam;
};

// File layout: magic "EVRFCKPT" | u64 json_size | JSON header | f64 parameter
// blob (deform layers then canonical, each W row-major then b) | optional
// first/second moment blobs in the same order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evrf::io
