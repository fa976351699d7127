#include "evrf/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace evrf::events {

namespace {

// Absorbs float noise when a change sits within a hair of the next whole
// quantum; keeps count_events an exact inverse of events_to_delta_l.
constexpr double kQuantSnap = 1e-6;

std::string pixel_str(int x, int y) { return "(" + std::to_string(x) + "," + std::to_string(y) + ")"; }

}  // namespace

EventStream::EventStream(int width, int height, Thresholds thresholds, std::vector<Event> events)
    : width_(width), height_(height), thresholds_(thresholds), events_(std::move(events)) {
  if (width_ <= 0 || height_ <= 0) throw ArgumentError("event stream: resolution must be positive");
  thresholds_.validate();
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (!std::isfinite(e.t) || e.t < 0.0)
      throw FormatError("event stream: bad timestamp at record " + std::to_string(i));
    if (e.t < prev_t) throw FormatError("event stream: timestamps decrease at record " + std::to_string(i));
    if (e.x >= width_ || e.y >= height_)
      throw FormatError("event stream: coordinate " + pixel_str(e.x, e.y) + " outside " +
                        std::to_string(width_) + "x" + std::to_string(height_) + " at record " + std::to_string(i));
    if (e.p != 1 && e.p != -1)
      throw FormatError("event stream: polarity must be -1 or +1 at record " + std::to_string(i));
    prev_t = e.t;
  }
}

DeltaLFrame::DeltaLFrame(int width, int height, TimeWindow window)
    : width_(width), height_(height), window_(window),
      values_(static_cast<std::size_t>(width) * height, 0.0) {
  if (width <= 0 || height <= 0) throw ArgumentError("frame: resolution must be positive");
  if (!(window.t0 < window.t1)) throw ArgumentError("frame: window start must precede end");
}

DeltaLFrame events_to_delta_l(const EventStream& batch, const TimeWindow& window) {
  DeltaLFrame frame(batch.width(), batch.height(), window);
  const std::size_t n = frame.values_.size();
  frame.pos_counts_.assign(n, 0);
  frame.neg_counts_.assign(n, 0);
  for (const Event& e : batch.events()) {
    if (e.t < window.t0 || e.t >= window.t1)
      throw ArgumentError("events_to_delta_l: event at t=" + std::to_string(e.t) + " outside window");
    std::size_t idx = static_cast<std::size_t>(e.y) * frame.width_ + e.x;
    if (e.p > 0)
      ++frame.pos_counts_[idx];
    else
      ++frame.neg_counts_[idx];
  }
  const Thresholds& thr = batch.thresholds();
  for (std::size_t i = 0; i < n; ++i)
    frame.values_[i] = frame.pos_counts_[i] * thr.c_pos + frame.neg_counts_[i] * thr.c_neg;
  return frame;
}

std::int32_t quantize_count(double delta_l, const Thresholds& thresholds) {
  if (delta_l >= 0.0) {
    double r = delta_l / thresholds.c_pos;
    return static_cast<std::int32_t>(std::floor(r + kQuantSnap));
  }
  double r = -delta_l / -thresholds.c_neg;
  return -static_cast<std::int32_t>(std::floor(r + kQuantSnap));
}

EventCountFrame count_events(const DeltaLFrame& frame, const Thresholds& thresholds) {
  thresholds.validate();
  EventCountFrame out{frame.width(), frame.height(), frame.window(), {}};
  out.counts.resize(frame.values().size());
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] = quantize_count(frame.values()[i], thresholds);
  return out;
}

std::vector<Event> generate_events(std::span<const double> logl_prev, std::span<const double> logl_next,
                                   std::span<double> ref_level, int width, int height,
                                   const Thresholds& thresholds, double t_prev, double t_next) {
  thresholds.validate();
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (logl_prev.size() != n || logl_next.size() != n || ref_level.size() != n)
    throw FormatError("generate_events: array shape does not match resolution");
  if (!(t_prev < t_next)) throw ArgumentError("generate_events: need t_prev < t_next");

  std::vector<Event> out;
  const double dt = t_next - t_prev;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * width + x;
      const double l0 = logl_prev[i];
      const double l1 = logl_next[i];
      double& ref = ref_level[i];
      if (l1 == l0) continue;
      const double step = (l1 > l0) ? thresholds.c_pos : thresholds.c_neg;
      const std::int8_t polarity = (l1 > l0) ? 1 : -1;
      double level = ref + step;
      while ((l1 > l0) ? (level <= l1 + kQuantSnap * thresholds.c_pos)
                       : (level >= l1 + kQuantSnap * thresholds.c_neg)) {
        double frac = (level - l0) / (l1 - l0);
        frac = std::clamp(frac, 0.0, 1.0);
        double t = t_prev + frac * dt;
        if (t >= t_next) t = std::nextafter(t_next, t_prev);  // events belong to [t_prev, t_next)
        out.push_back(Event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), polarity});
        ref = level;
        level += step;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return out;
}

std::vector<EventStream> slice_stream(const EventStream& stream, std::span<const double> edges) {
  if (edges.size() < 2) throw ArgumentError("slice_stream: need at least two window edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ArgumentError("slice_stream: edges must be strictly increasing");

  const std::vector<Event>& evs = stream.events();
  auto lower = [&](double t) {
    return std::lower_bound(evs.begin(), evs.end(), t, [](const Event& e, double v) { return e.t < v; });
  };
  std::vector<EventStream> slices;
  slices.reserve(edges.size() - 1);
  auto begin = lower(edges[0]);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto end = lower(edges[i + 1]);
    slices.emplace_back(stream.width(), stream.height(), stream.thresholds(), std::vector<Event>(begin, end));
    begin = end;
  }
  return slices;
}

std::vector<double> halve_windows(std::span<const double> edges) {
  if (edges.size() < 2) throw ArgumentError("halve_windows: need at least two edges");
  std::vector<double> out;
  out.reserve(edges.size() * 2 - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.push_back(edges[i]);
    out.push_back(0.5 * (edges[i] + edges[i + 1]));
  }
  out.push_back(edges.back());
  return out;
}

double sync_offset(const EventStream& stream, double bin_width, double k) {
  if (stream.empty()) throw ArgumentError("sync_offset: empty stream");
  if (!(bin_width > 0.0)) throw ArgumentError("sync_offset: bin width must be positive");

  const double t0 = stream.events().front().t;
  const double t_last = stream.events().back().t;
  const std::size_t n_bins = static_cast<std::size_t>(std::floor((t_last - t0) / bin_width)) + 1;
  std::vector<std::size_t> hist(n_bins, 0);
  for (const Event& e : stream.events()) {
    std::size_t b = static_cast<std::size_t>((e.t - t0) / bin_width);
    if (b >= n_bins) b = n_bins - 1;
    ++hist[b];
  }

  // Running stats over earlier bins; the stddev floor keeps the criterion
  // meaningful when only a handful of near-identical bins precede.
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    double mean = 0.0, sd = 0.0;
    if (i > 0) {
      mean = sum / static_cast<double>(i);
      double var = sum_sq / static_cast<double>(i) - mean * mean;
      sd = std::sqrt(std::max(var, 0.0));
    }
    double floor_sd = std::max(1.0, std::sqrt(mean));
    if (static_cast<double>(hist[i]) > mean + k * std::max(sd, floor_sd)) return t0 + static_cast<double>(i) * bin_width;
    sum += static_cast<double>(hist[i]);
    sum_sq += static_cast<double>(hist[i]) * static_cast<double>(hist[i]);
  }
  throw NotFoundError("sync_offset: no bin exceeds mean + k*stddev of its predecessors");
}

DeltaLFrame filter_event_frame(const DeltaLFrame& frame, double min_magnitude) {
  if (min_magnitude < 0.0) throw ArgumentError("filter_event_frame: threshold must be non-negative");
  DeltaLFrame out(frame.width(), frame.height(), frame.window());
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    double v = frame.values()[i];
    out.values()[i] = (std::abs(v) < min_magnitude) ? 0.0 : v;
  }
  return out;
}

EventCountFrame filter_event_frame(const EventCountFrame& frame, std::int32_t min_magnitude) {
  if (min_magnitude < 0) throw ArgumentError("filter_event_frame: threshold must be non-negative");
  EventCountFrame out = frame;
  for (auto& c : out.counts)
    if (std::abs(c) < min_magnitude) c = 0;
  return out;
}

DeltaLFrame add_frames(const DeltaLFrame& a, const DeltaLFrame& b, const Thresholds& thresholds) {
  if (a.width() != b.width() || a.height() != b.height())
    throw ArgumentError("add_frames: resolution mismatch");
  DeltaLFrame out(a.width(), a.height(),
                  TimeWindow{std::min(a.window().t0, b.window().t0), std::max(a.window().t1, b.window().t1)});
  const std::size_t n = out.values_.size();
  if (a.has_counts() && b.has_counts()) {
    out.pos_counts_.resize(n);
    out.neg_counts_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.pos_counts_[i] = a.pos_counts_[i] + b.pos_counts_[i];
      out.neg_counts_[i] = a.neg_counts_[i] + b.neg_counts_[i];
      out.values_[i] = out.pos_counts_[i] * thresholds.c_pos + out.neg_counts_[i] * thresholds.c_neg;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.values_[i] = a.values()[i] + b.values()[i];
  }
  return out;
}

}  // namespace evrf::events
