#include <cstring>
#include <fstream>
#include <json.hpp>

#include "evrf/checkpoint.hpp"

namespace evrf::io {

using nlohmann::json;
using nn::Mat;

namespace {

constexpr char kMagic[8] = {'E', 'V', 'R', 'F', 'C', 'K', 'P', 'T'};

const char* act_name(nn::Activation a) {
  switch (a) {
    case nn::Activation::kNone: return "none";
    case nn::Activation::kRelu: return "relu";
    case nn::Activation::kSoftplus: return "softplus";
    case nn::Activation::kSigmoid: return "sigmoid";
  }
  return "none";
}

nn::Activation act_from_name(const std::string& s) {
  if (s == "none") return nn::Activation::kNone;
  if (s == "relu") return nn::Activation::kRelu;
  if (s == "softplus") return nn::Activation::kSoftplus;
  if (s == "sigmoid") return nn::Activation::kSigmoid;
  throw FormatError("checkpoint: unknown activation '" + s + "'");
}

json mlp_meta(const nn::Mlp& mlp) {
  json layers = json::array();
  for (const auto& l : mlp.layers) {
    json lj;
    lj["in"] = l.w.rows();
    lj["out"] = l.w.cols();
    lj["act"] = act_name(l.act);
    layers.push_back(lj);
  }
  return layers;
}

void append_mat(std::string& blob, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      blob.append(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

void read_mat(const char*& p, const char* end, Mat& m) {
  const std::size_t need = static_cast<std::size_t>(m.size()) * sizeof(double);
  if (static_cast<std::size_t>(end - p) < need) throw FormatError("checkpoint: truncated parameter blob");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::memcpy(&m(r, c), p, sizeof(double));
      p += sizeof(double);
    }
}

void append_mlp(std::string& blob, const nn::Mlp& mlp) {
  for (const auto& l : mlp.layers) {
    append_mat(blob, l.w);
    append_mat(blob, l.b);
  }
}

nn::Mlp mlp_from_meta(const json& layers) {
  nn::Mlp mlp;
  for (const auto& lj : layers) {
    nn::LinearLayer l;
    l.w.resize(lj.at("in").get<Eigen::Index>(), lj.at("out").get<Eigen::Index>());
    l.b.resize(1, lj.at("out").get<Eigen::Index>());
    l.act = act_from_name(lj.at("act").get<std::string>());
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

json model_config_json(const render::ModelConfig& c) {
  return json{{"deform_depth", c.deform_depth},       {"deform_width", c.deform_width},
              {"canonical_depth", c.canonical_depth}, {"canonical_width", c.canonical_width},
              {"x_freqs", c.x_freqs},                 {"t_freqs", c.t_freqs},
              {"d_freqs", c.d_freqs},                 {"use_viewdirs", c.use_viewdirs},
              {"bounds", c.bounds},                   {"floor_b", c.floor_b},
              {"samples", c.samples},                 {"znear", c.znear},
              {"zfar", c.zfar}};
}

render::ModelConfig model_config_from_json(const json& j) {
  render::ModelConfig c;
  c.deform_depth = j.at("deform_depth").get<int>();
  c.deform_width = j.at("deform_width").get<int>();
  c.canonical_depth = j.at("canonical_depth").get<int>();
  c.canonical_width = j.at("canonical_width").get<int>();
  c.x_freqs = j.at("x_freqs").get<int>();
  c.t_freqs = j.at("t_freqs").get<int>();
  c.d_freqs = j.at("d_freqs").get<int>();
  c.use_viewdirs = j.at("use_viewdirs").get<bool>();
  c.bounds = j.at("bounds").get<double>();
  c.floor_b = j.at("floor_b").get<double>();
  c.samples = j.at("samples").get<int>();
  c.znear = j.at("znear").get<double>();
  c.zfar = j.at("zfar").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ckpt.model.validate();
  json header;
  header["format"] = 1;
  header["model"] = model_config_json(ckpt.model.config);
  header["deform_layers"] = mlp_meta(ckpt.model.deform);
  header["canonical_layers"] = mlp_meta(ckpt.model.canonical);
  header["seed"] = ckpt.seed;
  header["iteration"] = ckpt.schedule.iteration;
  header["schedule"] = json{{"iteration", ckpt.schedule.iteration},
                            {"window_edges", ckpt.schedule.window_edges},
                            {"admissible_windows", ckpt.schedule.admissible_windows},
                            {"lr", ckpt.schedule.lr}};
  header["has_moments"] = ckpt.adam.has_value();
  if (ckpt.adam) header["adam_step"] = ckpt.adam->step;

  std::string blob;
  append_mlp(blob, ckpt.model.deform);
  append_mlp(blob, ckpt.model.canonical);
  if (ckpt.adam) {
    for (const Mat& m : ckpt.adam->m) append_mat(blob, m);
    for (const Mat& v : ckpt.adam->v) append_mat(blob, v);
  }

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic, 8);
  std::uint64_t hsize = head.size();
  out.write(reinterpret_cast<const char*>(&hsize), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw FormatError("checkpoint: short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw FormatError("checkpoint: bad magic in " + path.string());
  std::uint64_t hsize;
  std::memcpy(&hsize, buf.data() + 8, 8);
  if (buf.size() < 16 + hsize) throw FormatError("checkpoint: truncated header");

  json header;
  try {
    header = json::parse(buf.substr(16, hsize));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: bad header JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.model.config = model_config_from_json(header.at("model"));
    ckpt.model.deform = mlp_from_meta(header.at("deform_layers"));
    ckpt.model.canonical = mlp_from_meta(header.at("canonical_layers"));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    const json& sj = header.at("schedule");
    ckpt.schedule.iteration = sj.at("iteration").get<std::int64_t>();
    ckpt.schedule.window_edges = sj.at("window_edges").get<std::vector<double>>();
    ckpt.schedule.admissible_windows = sj.at("admissible_windows").get<int>();
    ckpt.schedule.lr = sj.at("lr").get<double>();

    const char* p = buf.data() + 16 + hsize;
    const char* end = buf.data() + buf.size();
    for (auto& l : ckpt.model.deform.layers) {
      read_mat(p, end, l.w);
      read_mat(p, end, l.b);
    }
    for (auto& l : ckpt.model.canonical.layers) {
      read_mat(p, end, l.w);
      read_mat(p, end, l.b);
    }
    if (header.at("has_moments").get<bool>()) {
      nn::AdamState adam = nn::AdamState::zeros_for(nn::parameter_list(ckpt.model.deform, ckpt.model.canonical));
      adam.step = header.at("adam_step").get<std::int64_t>();
      for (Mat& m : adam.m) read_mat(p, end, m);
      for (Mat& v : adam.v) read_mat(p, end, v);
      ckpt.adam = std::move(adam);
    }
    if (p != end) throw FormatError("checkpoint: trailing bytes after parameter blob");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header field: ") + e.what());
  }
  ckpt.model.validate();
  return ckpt;
}

}  // namespace evrf::io
