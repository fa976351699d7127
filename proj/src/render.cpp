#include "evrf/render.hpp"

#include <cassert>
#include <cmath>
#include <cstring>

#include "evrf/errors.hpp"

namespace evrf::render {

double composite(RaySampleSet& s) {
  const Eigen::Index n = s.density.size();
  if (s.deltas.size() != n || s.intensity.size() != n) throw ArgumentError("composite: sample arrays disagree");
  if ((s.deltas.array() <= 0.0).any()) throw ArgumentError("composite: deltas must be positive");
  if ((s.density.array() < 0.0).any()) throw ArgumentError("composite: negative density violates the field contract");

  s.transmittance.resize(n);
  s.alpha.resize(n);
  s.weights.resize(n);
  double accum = 0.0;
  double color = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = s.density[i] * s.deltas[i];
    s.transmittance[i] = std::exp(-accum);
    s.alpha[i] = 1.0 - std::exp(-a);
    s.weights[i] = s.transmittance[i] * s.alpha[i];
    color += s.weights[i] * s.intensity[i];
    accum += a;
  }
#ifndef NDEBUG
  assert(s.transmittance[0] == 1.0);
  for (Eigen::Index i = 1; i < n; ++i) assert(s.transmittance[i] <= s.transmittance[i - 1]);
  assert((s.alpha.array() >= 0.0).all() && (s.alpha.array() <= 1.0).all());
  assert(s.weights.sum() <= 1.0 + 1e-12);
#endif
  return color;
}

namespace {

// Sample depths for a block of rays; jitter draws are keyed per ray so the
// same (ray, t) pair always sees the same quadrature.
void fill_geometry(std::span<const Ray> rays, double znear, double zfar, int samples, Rng* jitter,
                   Mat& points, Mat& dirs, Eigen::VectorXd& deltas, bool with_dirs) {
  const Eigen::Index n = static_cast<Eigen::Index>(rays.size()) * samples;
  points.resize(n, 3);
  deltas.resize(n);
  if (with_dirs) dirs.resize(n, 3);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    Rng ray_rng(0);
    Rng* jp = nullptr;
    if (jitter) {
      ray_rng = jitter->derive(static_cast<std::uint64_t>(r));
      jp = &ray_rng;
    }
    Eigen::VectorXd depth = stratified_depths(znear, zfar, samples, jp);
    for (int i = 0; i < samples; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(r) * samples + i;
      points.row(row) = (rays[r].origin + depth[i] * rays[r].dir).transpose();
      deltas[row] = (i + 1 < samples) ? depth[i + 1] - depth[i] : zfar - depth[i];
      if (with_dirs) dirs.row(row) = rays[r].dir.transpose();
    }
    // Keep the trailing delta positive when the last sample sits at zfar.
    const Eigen::Index last = static_cast<Eigen::Index>(r) * samples + samples - 1;
    if (deltas[last] <= 0.0) deltas[last] = 0.5 * (zfar - znear) / samples;
  }
}

}  // namespace

Eigen::VectorXd render_rays(const FieldFn& field, std::span<const Ray> rays, double znear, double zfar,
                            double t, const RenderOptions& opts) {
  Mat points, dirs;
  Eigen::VectorXd deltas;
  fill_geometry(rays, znear, zfar, opts.samples, opts.jitter, points, dirs, deltas, opts.with_dirs);

  Eigen::VectorXd intensity, density;
  field(points, dirs, t, intensity, density);

  Eigen::VectorXd out(static_cast<Eigen::Index>(rays.size()));
  RaySampleSet s;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const Eigen::Index base = static_cast<Eigen::Index>(r) * opts.samples;
    s.deltas = deltas.segment(base, opts.samples);
    s.density = density.segment(base, opts.samples);
    s.intensity = intensity.segment(base, opts.samples);
    out[static_cast<Eigen::Index>(r)] = composite(s);
  }
  return out;
}

Image render_field_image(const FieldFn& field, const Camera& camera, double t, const RenderOptions& opts) {
  std::vector<Ray> rays = camera.all_rays();
  Image img(camera.width, camera.height);
  // Render in row-sized blocks to bound the point buffers.
  const std::size_t block = static_cast<std::size_t>(camera.width) * 4;
  for (std::size_t off = 0; off < rays.size(); off += block) {
    const std::size_t count = std::min(block, rays.size() - off);
    Eigen::VectorXd c = render_rays(field, std::span<const Ray>(rays.data() + off, count), camera.znear,
                                    camera.zfar, t, opts);
    for (std::size_t i = 0; i < count; ++i) img.values[off + i] = c[static_cast<Eigen::Index>(i)];
  }
  return img;
}

FieldFn model_field(const SceneModel& model) {
  return [&model](const Mat& points, const Mat& dirs, double t, Eigen::VectorXd& intensity,
                  Eigen::VectorXd& density) { model.query(points, dirs, t, intensity, density); };
}

Image render_image(const SceneModel& model, const Camera& camera, double t, Rng* jitter) {
  RenderOptions opts;
  opts.samples = model.config.samples;
  opts.with_dirs = model.config.use_viewdirs;
  opts.jitter = jitter;
  return render_field_image(model_field(model), camera, t, opts);
}

Eigen::VectorXd render_delta_l(const SceneModel& model, std::span<const Ray> rays, double t0, double t1,
                               Rng* jitter) {
  RenderOptions opts;
  opts.samples = model.config.samples;
  opts.with_dirs = model.config.use_viewdirs;
  Rng rng0(0), rng1(0);
  if (jitter) {
    // Key the jitter on the timestamp bits: C(r, t) is then a pure function
    // of (ray, t) and delta-L is exactly antisymmetric in (t0, t1).
    std::uint64_t b0, b1;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&b0, &t0, 8);
    std::memcpy(&b1, &t1, 8);
    rng0 = jitter->derive(b0);
    rng1 = jitter->derive(b1);
  }
  opts.jitter = jitter ? &rng0 : nullptr;
  Eigen::VectorXd c0 = render_rays(model_field(model), rays, model.config.znear, model.config.zfar, t0, opts);
  opts.jitter = jitter ? &rng1 : nullptr;
  Eigen::VectorXd c1 = render_rays(model_field(model), rays, model.config.znear, model.config.zfar, t1, opts);
  const double fb = model.config.floor_b;
  return ((c1.array() + fb).log() - (c0.array() + fb).log()).matrix();
}

ModelVars register_model(nn::Tape& tape, const SceneModel& model, bool requires_grad) {
  ModelVars vars;
  vars.deform = nn::register_mlp(tape, model.deform, requires_grad);
  vars.canonical = nn::register_mlp(tape, model.canonical, requires_grad);
  return vars;
}

ChunkGeometry make_chunk_geometry(const ModelConfig& config, std::span<const Ray> rays, double t,
                                  Rng* jitter) {
  ChunkGeometry g;
  g.t = t;
  g.rays = static_cast<int>(rays.size());
  g.samples = config.samples;
  Mat dirs;
  fill_geometry(rays, config.znear, config.zfar, config.samples, jitter, g.points, dirs, g.deltas,
                config.use_viewdirs);
  Mat t_col = Mat::Constant(g.points.rows(), 1, t);
  g.deform_enc.resize(g.points.rows(), config.deform_input_dim());
  g.deform_enc << nn::positional_encode(g.points, config.x_freqs, true),
      nn::positional_encode(t_col, config.t_freqs, true);
  if (config.use_viewdirs) g.dir_enc = nn::positional_encode(dirs, config.d_freqs, true);
  g.mask = box_mask(g.points, config.bounds);
  return g;
}

int render_intensity_graph(nn::Tape& tape, const ModelVars& vars, const ModelConfig& config,
                           const ChunkGeometry& geom) {
  const int deform_in = tape.constant(geom.deform_enc);
  const int raw_dx = nn::mlp_forward(tape, vars.deform, deform_in);
  const int dx = tape.affine(raw_dx, geom.t, 0.0);  // displacement gate: exactly 0 at t = 0
  const int displaced = tape.add(dx, tape.constant(geom.points));
  int canon_in = tape.posenc(displaced, config.x_freqs, true);
  if (config.use_viewdirs) canon_in = tape.concat_cols(canon_in, tape.constant(geom.dir_enc));
  const int heads = nn::mlp_forward(tape, vars.canonical, canon_in);
  const int intensity = tape.sigmoid(tape.slice_cols(heads, 0, 1));
  const int density = tape.softplus(tape.slice_cols(heads, 1, 1));
  const int masked = tape.mul(density, tape.constant(geom.mask));
  const int a = tape.mul(masked, tape.constant(geom.deltas));
  const int transmittance = tape.exp_op(tape.affine(tape.seg_cumsum_exclusive(a, geom.samples), -1.0, 0.0));
  const int alpha = tape.affine(tape.exp_op(tape.affine(a, -1.0, 0.0)), -1.0, 1.0);
  const int weights = tape.mul(transmittance, alpha);
#ifndef NDEBUG
  {
    const auto& tv = tape.val(transmittance);
    const auto& wv = tape.val(weights);
    for (int r = 0; r < geom.rays; ++r) {
      const Eigen::Index base = static_cast<Eigen::Index>(r) * geom.samples;
      assert(tv(base, 0) == 1.0);
      double wsum = 0.0;
      for (int i = 0; i < geom.samples; ++i) {
        if (i > 0) assert(tv(base + i, 0) <= tv(base + i - 1, 0));
        assert(wv(base + i, 0) >= 0.0 && wv(base + i, 0) <= 1.0);
        wsum += wv(base + i, 0);
      }
      assert(wsum <= 1.0 + 1e-12);
    }
  }
#endif
  return tape.seg_sum(tape.mul(weights, intensity), geom.samples);
}

int render_delta_l_graph(nn::Tape& tape, const ModelVars& vars, const ModelConfig& config,
                         const ChunkGeometry& geom_t0, const ChunkGeometry& geom_t1) {
  const int c0 = render_intensity_graph(tape, vars, config, geom_t0);
  const int c1 = render_intensity_graph(tape, vars, config, geom_t1);
  return tape.sub(tape.log_shift(c1, config.floor_b), tape.log_shift(c0, config.floor_b));
}

}  // namespace evrf::render
