#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "evrf/io.hpp"
#include "evrf/training.hpp"
#include "evrf/version.hpp"

namespace evrf::train {

void TrainConfig::validate() const {
  if (total_iterations < 1) throw ArgumentError("train: total_iterations must be positive");
  if (rays_per_iteration < 1) throw ArgumentError("train: rays_per_iteration must be positive");
  if (positive_fraction < 0.0 || positive_fraction > 1.0)
    throw ArgumentError("train: positive_fraction must be in [0, 1]");
  if (!(lr > 0.0)) throw ArgumentError("train: lr must be positive");
  if (lr_warmup < 1) throw ArgumentError("train: lr_warmup must be >= 1");
  if (crop_iterations < 0 || progressive_iterations < 0) throw ArgumentError("train: negative schedule span");
  if (log_every < 1) throw ArgumentError("train: log_every must be >= 1");
  if (checkpoint_every < 0) throw ArgumentError("train: checkpoint_every must be >= 0");
  int prev = 0;
  for (int m : halving_milestones) {
    if (m <= prev) throw ArgumentError("train: halving milestones must be strictly increasing");
    if (m >= total_iterations) throw ArgumentError("train: halving milestone beyond total iterations");
    prev = m;
  }
  if (thresholds) thresholds->validate();
  if (chunk_rays < 1) throw ArgumentError("train: chunk_rays must be positive");
  model.validate();
}

DeadzoneTerm deadzone_term(double pred, double target, const events::Thresholds& thr) {
  // The bin's signed width follows the target polarity; a zero target uses
  // the prediction's own polarity, so anything in (c_neg, c_pos) is loss-free.
  double c;
  if (target > 0.0)
    c = thr.c_pos;
  else if (target < 0.0)
    c = thr.c_neg;
  else
    c = pred >= 0.0 ? thr.c_pos : thr.c_neg;
  DeadzoneTerm term;
  term.center = target + 0.5 * c;
  term.inside = c > 0.0 ? (pred >= target && pred < target + c) : (pred <= target && pred > target + c);
  return term;
}

double deadzone_loss(std::span<const double> pred, std::span<const double> target,
                     const events::Thresholds& thr) {
  if (pred.size() != target.size()) throw ArgumentError("deadzone_loss: span length mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(target[i]))
      throw NumericError("deadzone_loss: non-finite input at ray " + std::to_string(i));
    DeadzoneTerm term = deadzone_term(pred[i], target[i], thr);
    if (!term.inside) {
      double d = pred[i] - term.center;
      sum += d * d;
    }
  }
  return sum / static_cast<double>(pred.size());
}

void TargetSet::rebuild(const std::vector<const events::EventStream*>& streams,
                        std::vector<double> new_edges) {
  edges = std::move(new_edges);
  const std::size_t n_windows = edges.size() - 1;
  frames.assign(n_windows, {});
  nonzero.assign(n_windows, {});
  for (std::size_t v = 0; v < streams.size(); ++v) {
    auto slices = events::slice_stream(*streams[v], edges);
    for (std::size_t w = 0; w < n_windows; ++w) {
      events::TimeWindow window{edges[w], edges[w + 1]};
      events::DeltaLFrame frame = events::events_to_delta_l(slices[w], window);
      std::vector<std::int32_t> nz;
      for (std::size_t i = 0; i < frame.values().size(); ++i)
        if (frame.values()[i] != 0.0) nz.push_back(static_cast<std::int32_t>(i));
      frames[w].push_back(std::move(frame));
      nonzero[w].push_back(std::move(nz));
    }
  }
}

std::vector<RaySample> sample_rays(const std::vector<const events::DeltaLFrame*>& frames,
                                   const std::vector<const std::vector<std::int32_t>*>& nonzero,
                                   int n, double positive_fraction, const std::vector<CropRect>* crops,
                                   Rng& rng, bool* fell_back) {
  if (frames.empty()) throw ArgumentError("sample_rays: need at least one view");
  const int width = frames[0]->width();
  const int height = frames[0]->height();

  // Flat positive pool across views: (view, pixel) pairs with events.
  std::vector<std::size_t> pool_offsets{0};
  for (const auto* nz : nonzero) pool_offsets.push_back(pool_offsets.back() + nz->size());
  const std::size_t pool = pool_offsets.back();

  int n_pos = static_cast<int>(std::ceil(n * positive_fraction));
  if (pool == 0) {
    if (fell_back) *fell_back = true;
    n_pos = 0;
  } else if (fell_back) {
    *fell_back = false;
  }

  std::vector<RaySample> out;
  out.reserve(n);
  for (int i = 0; i < n_pos; ++i) {
    std::size_t flat = rng.below(pool);
    std::size_t view = 0;
    while (flat >= pool_offsets[view + 1]) ++view;
    out.push_back(RaySample{static_cast<int>(view),
                            (*nonzero[view])[flat - pool_offsets[view]]});
  }
  for (int i = n_pos; i < n; ++i) {
    int view = static_cast<int>(rng.below(frames.size()));
    int x0 = 0, y0 = 0, x1 = width, y1 = height;
    if (crops && !(*crops)[view].empty()) {
      const CropRect& r = (*crops)[view];
      x0 = r.x0;
      y0 = r.y0;
      x1 = r.x1;
      y1 = r.y1;
    }
    int x = x0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(x1 - x0)));
    int y = y0 + static_cast<int>(rng.below(static_cast<std::uint64_t>(y1 - y0)));
    out.push_back(RaySample{view, y * width + x});
  }
  return out;
}

void schedule_tick(ScheduleState& state, const TrainConfig& config, TargetSet& targets,
                   const std::vector<const events::EventStream*>& streams) {
  if (state.iteration >= config.total_iterations) throw ArgumentError("schedule_tick: run is complete");
  const std::int64_t iter = ++state.iteration;

  state.lr = config.lr * std::min(1.0, static_cast<double>(iter) / config.lr_warmup);
  state.crop_active = iter <= config.crop_iterations;

  for (int m : config.halving_milestones)
    if (iter == m) targets.rebuild(streams, events::halve_windows(targets.edges));
  state.window_edges = targets.edges;

  const int n_windows = static_cast<int>(targets.edges.size()) - 1;
  if (iter >= config.progressive_iterations) {
    state.admissible_windows = n_windows;
  } else {
    double frac = static_cast<double>(iter) / config.progressive_iterations;
    state.admissible_windows = std::clamp(static_cast<int>(std::ceil(frac * n_windows)), 1, n_windows);
  }
}

namespace {

std::vector<double> frame_aligned_edges(const io::Dataset& dataset) {
  // Initial batching matches the stored frame rate: one window between each
  // pair of consecutive frame times.
  if (dataset.frame_times.size() >= 2) return dataset.frame_times;
  std::vector<double> edges(32);
  for (int i = 0; i < 32; ++i) edges[i] = static_cast<double>(i) / 31.0;
  return edges;
}

CropRect activity_crop(const events::EventStream& stream, double pad) {
  int x0 = stream.width(), y0 = stream.height(), x1 = -1, y1 = -1;
  for (const events::Event& e : stream.events()) {
    x0 = std::min<int>(x0, e.x);
    y0 = std::min<int>(y0, e.y);
    x1 = std::max<int>(x1, e.x);
    y1 = std::max<int>(y1, e.y);
  }
  if (x1 < x0) return CropRect{};  // no events: crop disabled for this view
  const int pad_x = static_cast<int>(std::ceil(pad * (x1 - x0 + 1)));
  const int pad_y = static_cast<int>(std::ceil(pad * (y1 - y0 + 1)));
  CropRect r;
  r.x0 = std::max(0, x0 - pad_x);
  r.y0 = std::max(0, y0 - pad_y);
  r.x1 = std::min(stream.width(), x1 + 1 + pad_x);
  r.y1 = std::min(stream.height(), y1 + 1 + pad_y);
  return r;
}

}  // namespace

Trainer::Trainer(TrainConfig config, io::Dataset dataset, render::SceneModel model,
                 std::optional<nn::AdamState> adam, std::optional<io::ScheduleSnapshot> schedule)
    : config_(std::move(config)), dataset_(std::move(dataset)), model_(std::move(model)), master_(0) {
  config_.validate();
  model_.validate();
  thresholds_ = config_.thresholds.value_or(dataset_.thresholds);
  master_ = Rng(config_.seed);

  train_view_ids_ = dataset_.train_views();
  if (train_view_ids_.empty()) throw ArgumentError("train: dataset has no training views");

  // Rebuild streams under the configured thresholds so supervision and loss
  // agree even when the config overrides the recorded values.
  for (std::size_t id : train_view_ids_) {
    events::EventStream& s = dataset_.views[id].stream;
    if (s.thresholds().c_pos != thresholds_.c_pos || s.thresholds().c_neg != thresholds_.c_neg)
      s = events::EventStream(s.width(), s.height(), thresholds_, s.events());
    train_streams_.push_back(&s);
    crops_.push_back(activity_crop(s, config_.crop_pad));
  }

  if (schedule) {
    schedule_.iteration = schedule->iteration;
    schedule_.admissible_windows = schedule->admissible_windows;
    schedule_.lr = schedule->lr;
    targets_.rebuild(train_streams_, schedule->window_edges);
  } else {
    targets_.rebuild(train_streams_, frame_aligned_edges(dataset_));
  }
  schedule_.window_edges = targets_.edges;

  if (adam) {
    adam_ = std::move(*adam);
    if (adam_.m.size() != nn::parameter_list(model_.deform, model_.canonical).size())
      throw ArgumentError("train: optimizer state does not match model architecture");
  } else {
    adam_ = nn::AdamState::zeros_for(nn::parameter_list(model_.deform, model_.canonical));
  }
}

StepStats Trainer::step() {
  schedule_tick(schedule_, config_, targets_, train_streams_);
  const std::int64_t iter = schedule_.iteration;
  Rng rng_iter = master_.derive("iter").derive(static_cast<std::uint64_t>(iter));

  Rng rng_window = rng_iter.derive("window");
  const int wi = static_cast<int>(rng_window.below(schedule_.admissible_windows));
  const double t0 = targets_.edges[wi];
  const double t1 = targets_.edges[wi + 1];

  std::vector<const events::DeltaLFrame*> frames;
  std::vector<const std::vector<std::int32_t>*> nonzero;
  for (std::size_t v = 0; v < train_view_ids_.size(); ++v) {
    frames.push_back(&targets_.frames[wi][v]);
    nonzero.push_back(&targets_.nonzero[wi][v]);
  }
  Rng rng_rays = rng_iter.derive("rays");
  std::vector<RaySample> rays = sample_rays(frames, nonzero, config_.rays_per_iteration,
                                            config_.positive_fraction,
                                            schedule_.crop_active ? &crops_ : nullptr, rng_rays, &fell_back_);

  const int n = static_cast<int>(rays.size());
  std::vector<render::Ray> geom_rays(n);
  std::vector<double> targets(n);
  const int width = dataset_.width;
  for (int i = 0; i < n; ++i) {
    const RaySample& rs = rays[i];
    const render::Camera& cam = dataset_.views[train_view_ids_[rs.view]].camera;
    geom_rays[i] = cam.ray_through(rs.pixel % width, rs.pixel / width);
    targets[i] = frames[rs.view]->values()[rs.pixel];
  }

  // Chunked forward/backward: fixed-size chunks keep the gradient reduction
  // order independent of the thread count.
  const int chunk = config_.chunk_rays;
  const int n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<nn::Mlp> grad_deform(n_chunks), grad_canonical(n_chunks);
  std::vector<std::string> chunk_error(n_chunks);

  auto run_chunk = [&](int c) {
    try {
      const int begin = c * chunk;
      const int count = std::min(chunk, n - begin);
      std::span<const render::Ray> span_rays(geom_rays.data() + begin, static_cast<std::size_t>(count));

      nn::Tape tape;
      render::ModelVars vars = render::register_model(tape, model_, true);
      // Both window endpoints share one quadrature draw: a static scene then
      // yields exactly zero predicted change instead of jitter noise.
      Rng j0 = rng_iter.derive("jitter").derive(static_cast<std::uint64_t>(c));
      Rng j1 = j0;
      render::ChunkGeometry g0 = render::make_chunk_geometry(config_.model, span_rays, t0, &j0);
      render::ChunkGeometry g1 = render::make_chunk_geometry(config_.model, span_rays, t1, &j1);
      const int pred = render::render_delta_l_graph(tape, vars, config_.model, g0, g1);

      // Dead-zone terms from the freshly computed predictions.
      const nn::Mat& pv = tape.val(pred);
      nn::Mat center(count, 1), outside(count, 1);
      for (int i = 0; i < count; ++i) {
        DeadzoneTerm term = deadzone_term(pv(i, 0), targets[begin + i], thresholds_);
        center(i, 0) = term.center;
        outside(i, 0) = term.inside ? 0.0 : 1.0;
      }
      const int diff = tape.sub(pred, tape.constant(center));
      const int masked = tape.mul(tape.mul(diff, diff), tape.constant(outside));
      const int root = tape.sum_all(masked);
      chunk_loss[c] = tape.val(root)(0, 0);
      tape.backward(root, 1.0 / static_cast<double>(n));

      grad_deform[c] = nn::zeros_like(model_.deform);
      grad_canonical[c] = nn::zeros_like(model_.canonical);
      nn::accumulate_mlp_grads(tape, vars.deform, grad_deform[c]);
      nn::accumulate_mlp_grads(tape, vars.canonical, grad_canonical[c]);
    } catch (const std::exception& e) {
      chunk_error[c] = e.what();
    }
  };

  int n_threads = config_.threads > 0 ? config_.threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n_chunks));
  if (n_threads == 1) {
    for (int c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) run_chunk(c);
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int c = 0; c < n_chunks; ++c)
    if (!chunk_error[c].empty()) throw Error("train_step: " + chunk_error[c]);

  // Ordered reduction across chunks.
  nn::Mlp gd = nn::zeros_like(model_.deform);
  nn::Mlp gc = nn::zeros_like(model_.canonical);
  double loss = 0.0;
  for (int c = 0; c < n_chunks; ++c) {
    loss += chunk_loss[c];
    for (std::size_t l = 0; l < gd.layers.size(); ++l) {
      gd.layers[l].w += grad_deform[c].layers[l].w;
      gd.layers[l].b += grad_deform[c].layers[l].b;
    }
    for (std::size_t l = 0; l < gc.layers.size(); ++l) {
      gc.layers[l].w += grad_canonical[c].layers[l].w;
      gc.layers[l].b += grad_canonical[c].layers[l].b;
    }
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss))
    throw NumericError("train_step: non-finite loss at iteration " + std::to_string(iter) + ", window [" +
                       std::to_string(t0) + ", " + std::to_string(t1) + "), " + std::to_string(n) + " rays");

  nn::adam_step(nn::parameter_list(model_.deform, model_.canonical),
                nn::parameter_list(std::as_const(gd), std::as_const(gc)), adam_, config_.adam, schedule_.lr);

  StepStats stats;
  stats.iteration = iter;
  stats.loss = loss;
  stats.lr = schedule_.lr;
  stats.window_width = t1 - t0;
  stats.window = wi;
  return stats;
}

io::Checkpoint Trainer::make_checkpoint() const {
  io::Checkpoint ckpt;
  ckpt.model = model_;
  ckpt.schedule.iteration = schedule_.iteration;
  ckpt.schedule.window_edges = targets_.edges;
  ckpt.schedule.admissible_windows = schedule_.admissible_windows;
  ckpt.schedule.lr = schedule_.lr;
  ckpt.seed = config_.seed;
  ckpt.adam = adam_;
  return ckpt;
}

namespace {

void write_manifest(const std::filesystem::path& out_dir, const TrainConfig& config,
                    const io::Dataset& dataset, const std::vector<std::filesystem::path>& checkpoints) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["seed"] = config.seed;
  nlohmann::json cj;
  cj["train"] = {{"total_iterations", config.total_iterations},
                 {"rays_per_iteration", config.rays_per_iteration},
                 {"positive_fraction", config.positive_fraction},
                 {"lr", config.lr},
                 {"lr_warmup", config.lr_warmup},
                 {"crop_iterations", config.crop_iterations},
                 {"crop_pad", config.crop_pad},
                 {"progressive_iterations", config.progressive_iterations},
                 {"halving_milestones", config.halving_milestones},
                 {"c_pos", config.thresholds ? config.thresholds->c_pos : dataset.thresholds.c_pos},
                 {"c_neg", config.thresholds ? config.thresholds->c_neg : dataset.thresholds.c_neg},
                 {"checkpoint_every", config.checkpoint_every},
                 {"chunk_rays", config.chunk_rays},
                 {"deterministic", config.deterministic}};
  cj["model"] = {{"deform_depth", config.model.deform_depth},
                 {"deform_width", config.model.deform_width},
                 {"canonical_depth", config.model.canonical_depth},
                 {"canonical_width", config.model.canonical_width},
                 {"x_freqs", config.model.x_freqs},
                 {"t_freqs", config.model.t_freqs},
                 {"d_freqs", config.model.d_freqs},
                 {"use_viewdirs", config.model.use_viewdirs},
                 {"bounds", config.model.bounds},
                 {"floor_b", config.model.floor_b},
                 {"samples", config.model.samples},
                 {"znear", config.model.znear},
                 {"zfar", config.model.zfar}};
  doc["config"] = cj;
  doc["dataset"] = dataset.root.string();
  nlohmann::json hashes;
  for (const auto& view : dataset.views)
    hashes[view.events_path] = io::fnv1a_file(dataset.root / view.events_path);
  doc["dataset_hash"] = hashes;
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& p : checkpoints) cps.push_back(p.string());
  doc["checkpoints"] = cps;
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  out << doc.dump(1) << "\n";
}

}  // namespace

FitResult fit(const TrainConfig& config, const io::Dataset& dataset, const std::filesystem::path& out_dir,
              std::optional<io::Checkpoint> init) {
  std::filesystem::create_directories(out_dir);
  Rng model_rng = Rng(config.seed).derive("init");
  render::SceneModel model =
      init ? init->model : render::make_scene_model(config.model, model_rng);
  std::optional<nn::AdamState> adam;
  std::optional<io::ScheduleSnapshot> schedule;
  if (init) {
    adam = init->adam;
    if (init->schedule.iteration > 0 && init->schedule.iteration < config.total_iterations &&
        init->seed == config.seed) {
      // Same-run resume: continue the schedule exactly where it stopped.
      schedule = init->schedule;
    }
  }

  Trainer trainer(config, dataset, std::move(model), std::move(adam), std::move(schedule));

  std::ofstream log(out_dir / "loss_log.csv", std::ios::trunc);
  log << "iteration,lr,window_width,loss\n";
  log.precision(12);

  FitResult result;
  StepStats stats;
  while (trainer.schedule().iteration < config.total_iterations) {
    stats = trainer.step();
    if (stats.iteration == 1 || stats.iteration % config.log_every == 0 ||
        stats.iteration == config.total_iterations)
      log << stats.iteration << ',' << stats.lr << ',' << stats.window_width << ',' << stats.loss << '\n';
    if (config.checkpoint_every > 0 && stats.iteration % config.checkpoint_every == 0 &&
        stats.iteration != config.total_iterations) {
      auto path = out_dir / ("checkpoint_" + std::to_string(stats.iteration) + ".ckpt");
      io::save_checkpoint(path, trainer.make_checkpoint());
      result.checkpoints.push_back(path);
    }
  }
  result.final_loss = stats.loss;
  result.final_checkpoint = out_dir / "final.ckpt";
  io::save_checkpoint(result.final_checkpoint, trainer.make_checkpoint());
  result.checkpoints.push_back(result.final_checkpoint);
  write_manifest(out_dir, config, dataset, result.checkpoints);
  return result;
}

FitResult finetune(const std::filesystem::path& checkpoint_path, const TrainConfig& config,
                   const io::Dataset& dataset, const std::filesystem::path& out_dir) {
  io::Checkpoint ckpt = io::load_checkpoint(checkpoint_path);
  const render::ModelConfig& a = ckpt.model.config;
  const render::ModelConfig& b = config.model;
  if (a.deform_depth != b.deform_depth || a.deform_width != b.deform_width ||
      a.canonical_depth != b.canonical_depth || a.canonical_width != b.canonical_width ||
      a.x_freqs != b.x_freqs || a.t_freqs != b.t_freqs || a.d_freqs != b.d_freqs ||
      a.use_viewdirs != b.use_viewdirs)
    throw ArgumentError("finetune: checkpoint architecture does not match config");
  ckpt.model.config = config.model;  // rendering knobs may differ; architecture may not
  ckpt.schedule = io::ScheduleSnapshot{};  // schedule restarts
  return fit(config, dataset, out_dir, std::move(ckpt));
}

}  // namespace evrf::train
