#include <doctest.h>

#include <cmath>

#include "evrf/rng.hpp"
#include "oracles.hpp"

using namespace evrf;
using namespace evrf::events;

namespace {

EventStream make_stream(int w, int h, Thresholds thr, std::vector<Event> evs) {
  return EventStream(w, h, thr, std::move(evs));
}

EventStream random_stream(Rng& rng, int w, int h, Thresholds thr, std::size_t n, double t_max = 1.0) {
  std::vector<double> times(n);
  for (auto& t : times) t = rng.uniform(0.0, t_max);
  std::sort(times.begin(), times.end());
  std::vector<Event> evs(n);
  for (std::size_t i = 0; i < n; ++i)
    evs[i] = Event{times[i], static_cast<std::uint16_t>(rng.below(w)), static_cast<std::uint16_t>(rng.below(h)),
                   static_cast<std::int8_t>(rng.below(2) ? 1 : -1)};
  return make_stream(w, h, thr, std::move(evs));
}

}  // namespace

TEST_CASE("events_to_delta_l sums signed thresholds per pixel") {
  Thresholds thr{0.2, -0.25};
  auto stream = make_stream(8, 8, thr,
                            {{0.1, 2, 3, 1}, {0.2, 2, 3, 1}, {0.3, 5, 5, -1}});
  DeltaLFrame frame = events_to_delta_l(stream, {0.0, 1.0});
  CHECK(frame.at(2, 3) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(frame.at(5, 5) == doctest::Approx(-0.25).epsilon(1e-15));
  int nonzero = 0;
  for (double v : frame.values())
    if (v != 0.0) ++nonzero;
  CHECK(nonzero == 2);
}

TEST_CASE("events_to_delta_l of an empty batch is all zero") {
  auto stream = make_stream(4, 4, Thresholds{}, {});
  DeltaLFrame frame = events_to_delta_l(stream, {0.0, 1.0});
  for (double v : frame.values()) CHECK(v == 0.0);
}

TEST_CASE("events_to_delta_l rejects events outside the window") {
  auto stream = make_stream(4, 4, Thresholds{}, {{0.5, 1, 1, 1}});
  CHECK_THROWS_AS(events_to_delta_l(stream, {0.0, 0.4}), ArgumentError);
}

TEST_CASE("stream construction validates order, bounds, polarity") {
  CHECK_THROWS_AS(make_stream(4, 4, Thresholds{}, {{0.5, 1, 1, 1}, {0.4, 1, 1, 1}}), FormatError);
  CHECK_THROWS_AS(make_stream(4, 4, Thresholds{}, {{0.5, 4, 1, 1}}), FormatError);
  CHECK_THROWS_AS(make_stream(4, 4, Thresholds{}, {{0.5, 1, 1, 0}}), FormatError);
  CHECK_THROWS_AS(make_stream(4, 4, Thresholds{0.2, 0.2}, {}), ArgumentError);
}

TEST_CASE("two negative events reconstruct 2*c_neg") {
  Thresholds thr{0.2, -0.2};
  auto stream = make_stream(2, 2, thr, {{0.1, 0, 0, -1}, {0.2, 0, 0, -1}});
  DeltaLFrame frame = events_to_delta_l(stream, {0.0, 0.5});
  CHECK(frame.at(0, 0) == doctest::Approx(2.0 * thr.c_neg).epsilon(1e-15));
}

TEST_CASE("count_events truncates toward zero on both polarities") {
  Thresholds thr{0.2, -0.2};
  DeltaLFrame frame(2, 2, {0.0, 1.0});
  frame.at(0, 0) = 0.5;
  frame.at(1, 0) = 0.1;
  frame.at(0, 1) = -0.45;
  EventCountFrame counts = count_events(frame, thr);
  CHECK(counts.at(0, 0) == 2);
  CHECK(counts.at(1, 0) == 0);
  CHECK(counts.at(0, 1) == -2);
  CHECK(counts.at(1, 1) == 0);
}

TEST_CASE("quantization consistency: counts reproduce the raw signed counts") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(16));
    const int h = 1 + static_cast<int>(rng.below(16));
    const double c = rng.uniform(0.05, 0.7);
    Thresholds thr{c, -c};
    auto stream = random_stream(rng, w, h, thr, rng.below(2000));
    DeltaLFrame frame = events_to_delta_l(stream, {0.0, 1.0});
    EventCountFrame counts = count_events(frame, thr);
    test::PixelCounts oracle = test::brute_force_counts(stream, 0.0, 1.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) CHECK(counts.at(x, y) == oracle.net(x, y));
  }
}

TEST_CASE("generate_events emits crossings and carries residual") {
  Thresholds thr{0.2, -0.2};
  std::vector<double> prev{0.0}, next{0.5}, ref{0.0};
  auto evs = generate_events(prev, next, ref, 1, 1, thr, 0.0, 1.0);
  REQUIRE(evs.size() == 2);  // trunc(0.5 / 0.2)
  CHECK(evs[0].p == 1);
  CHECK(evs[1].p == 1);
  CHECK(evs[0].t == doctest::Approx(0.4));  // crossing of 0.2 on the way to 0.5
  CHECK(evs[1].t == doctest::Approx(0.8));
  CHECK(ref[0] == doctest::Approx(0.4).epsilon(1e-15));

  SUBCASE("constant brightness emits nothing") {
    std::vector<double> flat{0.3}, same{0.3}, r{0.3};
    CHECK(generate_events(flat, same, r, 1, 1, thr, 0.0, 1.0).empty());
    CHECK(r[0] == 0.3);
  }
  SUBCASE("window and shape validation") {
    std::vector<double> a{0.0}, b{0.1}, r{0.0};
    CHECK_THROWS_AS(generate_events(a, b, r, 1, 1, thr, 1.0, 1.0), ArgumentError);
    std::vector<double> bad{0.0, 0.1};
    CHECK_THROWS_AS(generate_events(bad, b, r, 1, 1, thr, 0.0, 1.0), FormatError);
  }
}

TEST_CASE("generate/reconstruct roundtrip stays within one quantum") {
  Rng rng(77);
  Thresholds thr{0.15, -0.25};
  const int w = 6, h = 5;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> l0(n), l1(n), ref(n);
  for (int trial = 0; trial < 30; ++trial) {
    for (std::size_t i = 0; i < n; ++i) {
      l0[i] = rng.uniform(-2.0, 2.0);
      l1[i] = rng.uniform(-2.0, 2.0);
      ref[i] = l0[i];
    }
    auto evs = generate_events(l0, l1, ref, w, h, thr, 0.0, 1.0);
    auto stream = make_stream(w, h, thr, std::move(evs));
    DeltaLFrame frame = events_to_delta_l(stream, {0.0, 1.0});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double truth = l1[y * w + x] - l0[y * w + x];
        const double quantum = truth >= 0.0 ? thr.c_pos : -thr.c_neg;
        CHECK(std::abs(frame.at(x, y) - truth) < quantum + 1e-12);
      }
  }
}

TEST_CASE("discretization aliasing: a dip emits events that cancel over the full span") {
  Thresholds thr{0.2, -0.2};
  std::vector<double> a{1.0}, dip{0.6}, back{1.0}, ref{1.0};
  auto down = generate_events(a, dip, ref, 1, 1, thr, 0.0, 0.5);
  REQUIRE(down.size() == 2);
  CHECK(down[0].p == -1);
  CHECK(down[1].p == -1);
  auto up = generate_events(dip, back, ref, 1, 1, thr, 0.5, 1.0);

  std::vector<Event> all(down);
  all.insert(all.end(), up.begin(), up.end());
  auto stream = make_stream(1, 1, thr, std::move(all));
  DeltaLFrame net = events_to_delta_l(stream, {0.0, 1.0});
  CHECK(std::abs(net.at(0, 0)) < thr.c_pos + 1e-12);
  CHECK(std::abs(net.at(0, 0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("slice_stream partitions exactly") {
  Rng rng(11);
  auto stream = random_stream(rng, 16, 16, Thresholds{}, 500);

  SUBCASE("brute-force membership over random edges") {
    std::vector<double> edges{0.0, 0.23, 0.5, 0.61, 1.01};
    auto slices = slice_stream(stream, edges);
    REQUIRE(slices.size() == 4);
    std::size_t total = 0;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      for (const Event& e : slices[i].events()) {
        CHECK(e.t >= edges[i]);
        CHECK(e.t < edges[i + 1]);
      }
      total += slices[i].size();
    }
    std::size_t expected = 0;
    for (const Event& e : stream.events())
      if (e.t >= edges.front() && e.t < edges.back()) ++expected;
    CHECK(total == expected);
  }
  SUBCASE("empty region gives an empty slice") {
    auto stream2 = make_stream(4, 4, Thresholds{}, {{0.9, 0, 0, 1}});
    auto slices = slice_stream(stream2, std::vector<double>{0.0, 0.5, 1.0});
    CHECK(slices[0].empty());
    CHECK(slices[1].size() == 1);
  }
  SUBCASE("single full-span window keeps every event") {
    auto slices = slice_stream(stream, std::vector<double>{0.0, 1.0 + 1e-9});
    CHECK(slices.size() == 1);
    CHECK(slices[0].size() == stream.size());
  }
  SUBCASE("argument validation") {
    CHECK_THROWS_AS(slice_stream(stream, std::vector<double>{0.5}), ArgumentError);
    CHECK_THROWS_AS(slice_stream(stream, std::vector<double>{0.5, 0.5}), ArgumentError);
  }
}

TEST_CASE("halve_windows inserts midpoints") {
  std::vector<double> edges{0.0, 0.5, 1.0};
  auto once = halve_windows(edges);
  CHECK(once == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  auto twice = halve_windows(halve_windows(std::vector<double>{0.0, 1.0}));
  CHECK(twice == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("sub-window additivity is exact") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Thresholds thr{rng.uniform(0.05, 0.5), -rng.uniform(0.05, 0.5)};
    auto stream = random_stream(rng, 12, 9, thr, 3000);
    std::vector<double> edges{0.0, 1.0 + 1e-9};
    for (int i = 0; i < 3; ++i) edges = halve_windows(edges);
    auto slices = slice_stream(stream, edges);
    DeltaLFrame sum = events_to_delta_l(slices[0], {edges[0], edges[1]});
    for (std::size_t i = 1; i < slices.size(); ++i)
      sum = add_frames(sum, events_to_delta_l(slices[i], {edges[i], edges[i + 1]}), thr);
    DeltaLFrame whole = events_to_delta_l(stream, {edges.front(), edges.back()});
    for (std::size_t i = 0; i < whole.values().size(); ++i) CHECK(sum.values()[i] == whole.values()[i]);
  }
}

TEST_CASE("sync_offset finds the burst bin") {
  Rng rng(9);
  Thresholds thr{};
  SUBCASE("uniform noise plus a burst") {
    std::vector<double> times;
    for (int i = 0; i < 100; ++i) times.push_back(rng.uniform(0.0, 1.0));  // ~100 ev/s noise
    for (int i = 0; i < 10000; ++i) times.push_back(0.37 + rng.uniform(0.0, 1e-4));
    std::sort(times.begin(), times.end());
    std::vector<Event> evs;
    for (double t : times) evs.push_back(Event{t, 0, 0, 1});
    auto stream = make_stream(2, 2, thr, std::move(evs));
    double offset = sync_offset(stream, 0.01);
    CHECK(offset == doctest::Approx(0.37).epsilon(0.04));  // within one bin
  }
  SUBCASE("burst in the first bin returns its left edge") {
    std::vector<Event> evs;
    for (int i = 0; i < 1000; ++i) evs.push_back(Event{1e-5 * i, 0, 0, 1});
    auto stream = make_stream(2, 2, thr, std::move(evs));
    CHECK(sync_offset(stream, 0.05) == doctest::Approx(0.0));
  }
  SUBCASE("empty stream and no-peak errors") {
    CHECK_THROWS_AS(sync_offset(make_stream(2, 2, thr, {}), 0.01), ArgumentError);
    std::vector<Event> evs;
    for (int i = 0; i < 200; ++i) evs.push_back(Event{i * 0.005, 0, 0, 1});  // perfectly flat
    CHECK_THROWS_AS(sync_offset(make_stream(2, 2, thr, std::move(evs)), 0.01), NotFoundError);
  }
}

TEST_CASE("filter_event_frame zeroes small magnitudes and is idempotent") {
  DeltaLFrame frame(3, 1, {0.0, 1.0});
  frame.at(0, 0) = 0.05;
  frame.at(1, 0) = -0.4;
  frame.at(2, 0) = 0.3;
  DeltaLFrame filtered = filter_event_frame(frame, 0.1);
  CHECK(filtered.at(0, 0) == 0.0);
  CHECK(filtered.at(1, 0) == -0.4);
  CHECK(filtered.at(2, 0) == 0.3);

  DeltaLFrame again = filter_event_frame(filtered, 0.1);
  for (std::size_t i = 0; i < again.values().size(); ++i) CHECK(again.values()[i] == filtered.values()[i]);

  DeltaLFrame identity = filter_event_frame(frame, 0.0);
  for (std::size_t i = 0; i < identity.values().size(); ++i) CHECK(identity.values()[i] == frame.values()[i]);

  DeltaLFrame zero = filter_event_frame(frame, 10.0);
  for (double v : zero.values()) CHECK(v == 0.0);

  EventCountFrame counts{3, 1, {0.0, 1.0}, {1, -3, 0}};
  EventCountFrame fc = filter_event_frame(counts, 2);
  CHECK(fc.counts == std::vector<std::int32_t>{0, -3, 0});
}
