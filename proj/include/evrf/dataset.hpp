#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evrf/camera.hpp"
#include "evrf/events.hpp"

namespace evrf::io {

// One captured viewpoint: a fixed camera and its recorded eventstream.
struct DatasetView {
  render::Camera camera;
  events::EventStream stream;
  bool validation = false;
  std::string events_path;
  double azimuth_deg = 0.0;
};

struct Dataset {
  int width = 0;
  int height = 0;
  double camera_angle_x = 0.0;
  events::Thresholds thresholds;
  std::vector<DatasetView> views;
  std::vector<double> frame_times;  // stored frame timestamps, sorted
  std::filesystem::path root;

  std::vector<std::size_t> train_views() const;
  std::vector<std::size_t> val_views() const;
};

// Reads views.json + the per-view EVD1 files. `train_subset`, when given,
// keeps only those training views (by position among training views);
// validation views are always kept. znear/zfar configure the loaded cameras.
Dataset load_dataset(const std::filesystem::path& dir, double znear, double zfar,
                     const std::optional<std::vector<int>>& train_subset = std::nullopt);

// Metadata used by gen_dataset to emit views.json.
struct ViewRecord {
  Eigen::Matrix4d transform;
  bool validation = false;
  std::string events_file;
  double azimuth_deg = 0.0;
  std::vector<std::pair<double, std::string>> frames;  // (time, file_path)
};

void write_views_json(const std::filesystem::path& path, double camera_angle_x, int width, int height,
                      const events::Thresholds& thresholds, const std::vector<ViewRecord>& views);

}  // namespace evrf::io
