#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evrf/errors.hpp"

namespace evrf::events {

// One brightness-change record: time, pixel, polarity.
struct Event {
  double t = 0.0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // -1 or +1
};

// Signed log-brightness quanta. One positive event means the log brightness
// rose by c_pos; one negative event means it fell by |c_neg|.
struct Thresholds {
  double c_pos = 0.2;
  double c_neg = -0.2;

  void validate() const {
    if (!(c_pos > 0.0) || !(c_neg < 0.0)) throw ArgumentError("thresholds: need c_pos > 0 and c_neg < 0");
  }
};

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  double width() const { return t1 - t0; }
};

// Time-ordered event collection with its sensor geometry. Immutable after
// construction; construction validates ordering and coordinate bounds.
class EventStream {
 public:
  EventStream(int width, int height, Thresholds thresholds, std::vector<Event> events);

  int width() const { return width_; }
  int height() const { return height_; }
  const Thresholds& thresholds() const { return thresholds_; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  int width_;
  int height_;
  Thresholds thresholds_;
  std::vector<Event> events_;
};

// Per-pixel net log-brightness change over a time window. When built from an
// eventstream the per-polarity integer counts are kept alongside the values,
// which makes frame sums exact (no float accumulation drift).
class DeltaLFrame {
 public:
  DeltaLFrame() = default;
  DeltaLFrame(int width, int height, TimeWindow window);

  int width() const { return width_; }
  int height() const { return height_; }
  const TimeWindow& window() const { return window_; }
  TimeWindow& window() { return window_; }

  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool has_counts() const { return !pos_counts_.empty(); }
  const std::vector<std::int32_t>& pos_counts() const { return pos_counts_; }
  const std::vector<std::int32_t>& neg_counts() const { return neg_counts_; }

  friend DeltaLFrame events_to_delta_l(const EventStream&, const TimeWindow&);
  friend DeltaLFrame add_frames(const DeltaLFrame&, const DeltaLFrame&, const Thresholds&);

 private:
  int width_ = 0;
  int height_ = 0;
  TimeWindow window_;
  std::vector<double> values_;
  std::vector<std::int32_t> pos_counts_;  // per-polarity event counts; empty unless event-derived
  std::vector<std::int32_t> neg_counts_;
};

// Per-pixel signed event counts over a window.
struct EventCountFrame {
  int width = 0;
  int height = 0;
  TimeWindow window;
  std::vector<std::int32_t> counts;

  std::int32_t at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }
};

// Net log-brightness change of an event batch by per-pixel signed summation
// of threshold quanta. Events must fall inside `window` and the stream bounds.
DeltaLFrame events_to_delta_l(const EventStream& batch, const TimeWindow& window);

// Number of whole threshold quanta contained in each pixel's net change,
// truncated toward zero: |value| below the matching threshold yields 0.
EventCountFrame count_events(const DeltaLFrame& frame, const Thresholds& thresholds);

// Quantize one net log-brightness change into a signed event count.
std::int32_t quantize_count(double delta_l, const Thresholds& thresholds);

// Emit the events an ideal sensor would fire while log brightness moves
// linearly from `logl_prev` to `logl_next` over [t_prev, t_next). `ref_level`
// is the per-pixel level of the last fired event and is advanced in place, so
// residual sub-threshold changes carry across calls. Returns events sorted by
// time.
std::vector<Event> generate_events(std::span<const double> logl_prev, std::span<const double> logl_next,
                                   std::span<double> ref_level, int width, int height,
                                   const Thresholds& thresholds, double t_prev, double t_next);

// Partition a stream by half-open windows [edges[i], edges[i+1]).
std::vector<EventStream> slice_stream(const EventStream& stream, std::span<const double> edges);

// Insert the midpoint of every consecutive edge pair: n edges -> 2n-1.
std::vector<double> halve_windows(std::span<const double> edges);

// Left edge of the first histogram bin whose count spikes above the running
// mean + k*stddev of the bins before it; the motion-start timestamp used to
// align multi-view captures. Bins are anchored at the first event.
double sync_offset(const EventStream& stream, double bin_width, double k = 5.0);

// Zero out entries with magnitude below `min_magnitude`.
DeltaLFrame filter_event_frame(const DeltaLFrame& frame, double min_magnitude);
EventCountFrame filter_event_frame(const EventCountFrame& frame, std::int32_t min_magnitude);

// Per-pixel sum of two windows' frames. Exact (integer count arithmetic) when
// both operands are event-derived.
DeltaLFrame add_frames(const DeltaLFrame& a, const DeltaLFrame& b, const Thresholds& thresholds);

}  // namespace evrf::events
