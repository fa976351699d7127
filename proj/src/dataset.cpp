#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "evrf/dataset.hpp"
#include "evrf/io.hpp"

namespace evrf::io {

using nlohmann::json;

std::vector<std::size_t> Dataset::train_views() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (!views[i].validation) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::val_views() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].validation) out.push_back(i);
  return out;
}

namespace {

json matrix_to_json(const Eigen::Matrix4d& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix4d matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.size() != 4) throw FormatError("views.json: transform_matrix must be 4x4");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    if (!rows[r].is_array() || rows[r].size() != 4) throw FormatError("views.json: transform_matrix must be 4x4");
    for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

}  // namespace

void write_views_json(const std::filesystem::path& path, double camera_angle_x, int width, int height,
                      const events::Thresholds& thresholds, const std::vector<ViewRecord>& views) {
  json doc;
  doc["camera_angle_x"] = camera_angle_x;
  doc["width"] = width;
  doc["height"] = height;
  doc["c_pos"] = thresholds.c_pos;
  doc["c_neg"] = thresholds.c_neg;
  json frames = json::array();
  json view_list = json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ViewRecord& v = views[i];
    for (const auto& [time, file] : v.frames) {
      json f;
      f["file_path"] = file;
      f["time"] = time;
      f["transform_matrix"] = matrix_to_json(v.transform);
      f["view"] = i;
      frames.push_back(f);
    }
    json vj;
    vj["index"] = i;
    vj["role"] = v.validation ? "val" : "train";
    vj["events"] = v.events_file;
    vj["azimuth_deg"] = v.azimuth_deg;
    vj["transform_matrix"] = matrix_to_json(v.transform);
    view_list.push_back(vj);
  }
  doc["frames"] = frames;
  doc["views"] = view_list;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("views.json: cannot open " + path.string() + " for writing");
  out << doc.dump(1) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir, double znear, double zfar,
                     const std::optional<std::vector<int>>& train_subset) {
  const auto meta_path = dir / "views.json";
  std::ifstream in(meta_path);
  if (!in) throw FormatError("dataset: cannot open " + meta_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("dataset: invalid JSON in " + meta_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.root = dir;
  try {
    ds.camera_angle_x = doc.at("camera_angle_x").get<double>();
    ds.width = doc.at("width").get<int>();
    ds.height = doc.at("height").get<int>();
    ds.thresholds = events::Thresholds{doc.at("c_pos").get<double>(), doc.at("c_neg").get<double>()};

    int train_position = 0;
    for (const auto& vj : doc.at("views")) {
      const bool validation = vj.at("role").get<std::string>() == "val";
      if (!validation && train_subset) {
        bool keep = false;
        for (int want : *train_subset)
          if (want == train_position) keep = true;
        ++train_position;
        if (!keep) continue;
      } else if (!validation) {
        ++train_position;
      }
      DatasetView view{
          render::Camera::from_angle_x(ds.width, ds.height, ds.camera_angle_x,
                                       matrix_from_json(vj.at("transform_matrix")), znear, zfar),
          read_events(dir / vj.at("events").get<std::string>()),
          validation,
          vj.at("events").get<std::string>(),
          vj.value("azimuth_deg", 0.0),
      };
      ds.views.push_back(std::move(view));
    }
    if (doc.contains("frames")) {
      for (const auto& f : doc.at("frames")) ds.frame_times.push_back(f.at("time").get<double>());
      std::sort(ds.frame_times.begin(), ds.frame_times.end());
      ds.frame_times.erase(std::unique(ds.frame_times.begin(), ds.frame_times.end()), ds.frame_times.end());
    }
  } catch (const json::exception& e) {
    throw FormatError("dataset: missing or malformed field in " + meta_path.string() + ": " + e.what());
  }
  if (ds.views.empty()) throw FormatError("dataset: no views in " + meta_path.string());
  return ds;
}

}  // namespace evrf::io
