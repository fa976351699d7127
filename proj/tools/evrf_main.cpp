// Command line front end: dataset generation, training, fine-tuning,
// rendering, evaluation, and eventstream utilities.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>

#include "evrf/io.hpp"
#include "evrf/metrics.hpp"
#include "evrf/run_config.hpp"
#include "evrf/version.hpp"

namespace {

using namespace evrf;

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  std::string out_dir = ".";
  int threads = 0;
};

io::Config load_config(const GlobalArgs& g) {
  if (g.config_path.empty()) return io::Config{};
  return io::Config::parse_file(g.config_path);
}

std::vector<events::TimeWindow> parse_windows(const std::vector<std::string>& specs) {
  std::vector<events::TimeWindow> out;
  for (const std::string& s : specs) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
      throw ArgumentError("window '" + s + "' must look like t0:t1");
    try {
      out.push_back(events::TimeWindow{std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ArgumentError("window '" + s + "' must look like t0:t1");
    }
  }
  return out;
}

int cmd_gen(const GlobalArgs& g) {
  io::Config cfg = load_config(g);
  synth::AnalyticScene scene = io::load_scene(cfg);
  synth::GenConfig gen = io::load_gen_config(cfg);
  cfg.reject_unknown_keys({"train", "model"});
  if (g.threads > 0) gen.threads = g.threads;
  synth::gen_dataset(scene, gen, g.out_dir);
  std::cout << "wrote dataset to " << g.out_dir << "\n";
  return 0;
}

int cmd_train(const GlobalArgs& g, const std::string& data_dir, const std::vector<int>& views,
              const std::string& init_ckpt) {
  io::Config cfg = load_config(g);
  train::TrainConfig tc = io::load_train_config(cfg);
  cfg.reject_unknown_keys({"scene", "gen"});
  if (g.seed_set) tc.seed = g.seed;
  if (g.threads > 0) tc.threads = g.threads;
  if (g.deterministic) {
    tc.deterministic = true;
    tc.threads = 1;
  }
  auto subset = views.empty() ? std::nullopt : std::optional<std::vector<int>>(views);
  io::Dataset dataset = io::load_dataset(data_dir, tc.model.znear, tc.model.zfar, subset);
  train::FitResult result;
  if (init_ckpt.empty())
    result = train::fit(tc, dataset, g.out_dir);
  else
    result = train::finetune(init_ckpt, tc, dataset, g.out_dir);
  std::cout << "final checkpoint: " << result.final_checkpoint.string() << "\n";
  std::cout << "final loss: " << result.final_loss << "\n";
  return 0;
}

int cmd_render(const GlobalArgs& g, const std::string& ckpt_path, const std::string& data_dir, int view,
               const std::vector<std::string>& window_specs, const std::vector<double>& times,
               const std::string& path_file, int png_cap) {
  io::Checkpoint ckpt = io::load_checkpoint(ckpt_path);
  io::Dataset dataset = io::load_dataset(data_dir, ckpt.model.config.znear, ckpt.model.config.zfar);
  if (view < 0 || view >= static_cast<int>(dataset.views.size()))
    throw ArgumentError("render: view index out of range");
  const render::Camera& camera = dataset.views[view].camera;
  std::filesystem::create_directories(g.out_dir);

  for (const events::TimeWindow& w : parse_windows(window_specs)) {
    events::DeltaLFrame frame = metrics::render_delta_l_frame(ckpt.model, camera, w);
    char name[96];
    std::snprintf(name, sizeof(name), "delta_l_v%02d_%05.3f_%05.3f", view, w.t0, w.t1);
    io::write_npy(frame.values(), frame.height(), frame.width(),
                  std::filesystem::path(g.out_dir) / (std::string(name) + ".npy"));
    io::write_png(io::event_frame_to_rgb(events::count_events(frame, dataset.thresholds), png_cap),
                  std::filesystem::path(g.out_dir) / (std::string(name) + ".png"));
    std::cout << "wrote " << name << ".png/.npy\n";
  }
  for (double t : times) {
    Image img = render::render_image(ckpt.model, camera, t);
    char name[64];
    std::snprintf(name, sizeof(name), "intensity_v%02d_t%05.3f.pgm", view, t);
    io::write_pgm16(img, std::filesystem::path(g.out_dir) / name);
    std::cout << "wrote " << name << "\n";
  }
  if (!path_file.empty()) {
    std::ifstream in(path_file);
    if (!in) throw FormatError("render: cannot open camera path " + path_file);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw FormatError("render: camera path is not valid JSON");
    metrics::EvalConfig ec;
    ec.png_cap = png_cap;
    ec.out_dir = g.out_dir;
    ec.threads = g.threads;
    for (const auto& entry : doc) {
      Eigen::Matrix4d m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = entry.at("transform_matrix").at(r).at(c).get<double>();
      ec.camera_path.emplace_back(m, events::TimeWindow{entry.at("t0").get<double>(),
                                                        entry.at("t1").get<double>()});
    }
    ec.views = {dataset.val_views().empty() ? std::size_t{0} : dataset.val_views()[0]};
    metrics::evaluate(ckpt.model, dataset, ec);
    std::cout << "wrote " << ec.camera_path.size() << " camera-path frames\n";
  }
  return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& ckpt_path, const std::string& data_dir,
             const std::vector<std::string>& window_specs, bool frame_windows,
             const std::vector<std::size_t>& views, double filter_min, int png_cap) {
  io::Checkpoint ckpt = io::load_checkpoint(ckpt_path);
  io::Dataset dataset = io::load_dataset(data_dir, ckpt.model.config.znear, ckpt.model.config.zfar);
  metrics::EvalConfig ec;
  ec.windows = parse_windows(window_specs);
  if (frame_windows) {
    for (std::size_t i = 0; i + 1 < dataset.frame_times.size(); ++i)
      ec.windows.push_back(events::TimeWindow{dataset.frame_times[i], dataset.frame_times[i + 1]});
  }
  if (ec.windows.empty()) throw ArgumentError("eval: no windows requested");
  ec.views = views;
  ec.filter_min = filter_min;
  ec.png_cap = png_cap;
  ec.out_dir = g.out_dir;
  ec.threads = g.threads;
  metrics::EvalReport report = metrics::evaluate(ckpt.model, dataset, ec);
  if (report.mean_psnr) std::cout << "mean PSNR: " << *report.mean_psnr << " dB\n";
  if (report.mean_ssim) std::cout << "mean SSIM: " << *report.mean_ssim << "\n";
  if (report.mean_mae) std::cout << "mean MAE: " << *report.mean_mae << " events\n";
  std::cout << "report written to " << g.out_dir << "\n";
  return 0;
}

int cmd_slice(const GlobalArgs& g, const std::string& events_file, std::vector<double> edges, int halve,
              double sync_bin, double filter_min, int png_cap) {
  events::EventStream stream = io::read_events(events_file);
  std::filesystem::create_directories(g.out_dir);
  nlohmann::json meta;

  if (sync_bin > 0.0) {
    double offset = events::sync_offset(stream, sync_bin);
    meta["sync_offset"] = offset;
    std::cout << "sync offset: " << offset << "\n";
  }
  if (edges.empty()) {
    // Default to the full recorded span.
    if (!stream.empty())
      edges = {stream.events().front().t,
               std::nextafter(stream.events().back().t, std::numeric_limits<double>::infinity())};
  }
  for (int i = 0; i < halve; ++i) edges = events::halve_windows(edges);
  meta["edges"] = edges;

  if (edges.size() >= 2) {
    auto slices = events::slice_stream(stream, edges);
    nlohmann::json slice_meta = nlohmann::json::array();
    for (std::size_t i = 0; i < slices.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "slice_%03zu.evd1", i);
      io::write_events(slices[i], std::filesystem::path(g.out_dir) / name);
      events::TimeWindow w{edges[i], edges[i + 1]};
      events::DeltaLFrame frame = events::events_to_delta_l(slices[i], w);
      if (filter_min > 0.0) frame = events::filter_event_frame(frame, filter_min);
      char png_name[64];
      std::snprintf(png_name, sizeof(png_name), "slice_%03zu.png", i);
      io::write_png(io::event_frame_to_rgb(events::count_events(frame, stream.thresholds()), png_cap),
                    std::filesystem::path(g.out_dir) / png_name);
      slice_meta.push_back({{"file", name}, {"t0", w.t0}, {"t1", w.t1}, {"events", slices[i].size()}});
    }
    meta["slices"] = slice_meta;
    std::cout << "wrote " << slices.size() << " slices\n";
  }
  std::ofstream out(std::filesystem::path(g.out_dir) / "slices.json", std::ios::trunc);
  out << meta.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-supervised dynamic radiance fields"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "config file (sectioned key = value)");
  app.add_option("--seed", g.seed, "override the run seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_flag("--deterministic", g.deterministic, "single-threaded, bit-reproducible mode");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

  auto* gen = app.add_subcommand("gen", "generate a synthetic event dataset");

  std::string data_dir, init_ckpt, ckpt_path, path_file, events_file_for_slice;
  std::vector<int> train_views;
  auto* tr = app.add_subcommand("train", "train a model on an event dataset");
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--views", train_views, "train-view subset (indices among training views)");

  auto* ft = app.add_subcommand("finetune", "continue training from a checkpoint on a new dataset");
  ft->add_option("--data", data_dir, "dataset directory")->required();
  ft->add_option("--init", init_ckpt, "checkpoint to start from")->required();

  int view = 0, png_cap = 8, halve = 0;
  std::vector<std::string> window_specs;
  std::vector<double> times, edges;
  std::vector<std::size_t> eval_views;
  bool frame_windows = false;
  double filter_min = 0.0, sync_bin = 0.0;

  auto* rd = app.add_subcommand("render", "render event frames / intensity images from a checkpoint");
  rd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  rd->add_option("--data", data_dir, "dataset directory (for cameras)")->required();
  rd->add_option("--view", view, "view index");
  rd->add_option("--window", window_specs, "time window t0:t1 (repeatable)");
  rd->add_option("--time", times, "intensity render timestamps");
  rd->add_option("--path", path_file, "camera path JSON for qualitative frames");
  rd->add_option("--png-cap", png_cap, "event count at full color saturation");

  auto* ev = app.add_subcommand("eval", "score a checkpoint against recorded events");
  ev->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--window", window_specs, "time window t0:t1 (repeatable)");
  ev->add_flag("--frame-windows", frame_windows, "evaluate every stored frame-aligned window");
  ev->add_option("--views", eval_views, "view indices (default: validation views)");
  ev->add_option("--filter", filter_min, "zero predicted |delta L| below this");
  ev->add_option("--png-cap", png_cap, "event count at full color saturation");

  auto* sl = app.add_subcommand("slice", "slice / halve / filter / sync an eventstream");
  sl->add_option("--events", events_file_for_slice, "eventstream (EVD1)")->required();
  sl->add_option("--edges", edges, "window edges");
  sl->add_option("--halve", halve, "halve the windows N times");
  sl->add_option("--sync", sync_bin, "histogram bin width for motion-start sync");
  sl->add_option("--filter", filter_min, "zero |delta L| below this in slice PNGs");
  sl->add_option("--png-cap", png_cap, "event count at full color saturation");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen(g);
    if (tr->parsed()) return cmd_train(g, data_dir, train_views, "");
    if (ft->parsed()) return cmd_train(g, data_dir, {}, init_ckpt);
    if (rd->parsed()) return cmd_render(g, ckpt_path, data_dir, view, window_specs, times, path_file, png_cap);
    if (ev->parsed())
      return cmd_eval(g, ckpt_path, data_dir, window_specs, frame_windows, eval_views, filter_min, png_cap);
    if (sl->parsed()) return cmd_slice(g, events_file_for_slice, edges, halve, sync_bin, filter_min, png_cap);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are exit 1
  } catch (const NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
