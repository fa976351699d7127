#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evrf/events.hpp"
#include "evrf/image.hpp"

namespace evrf::io {

// ---- eventstream codecs ----------------------------------------------------
//
// EVD1 binary layout, little-endian:
//   magic "EVD1" | u32 width | u32 height | f64 c_pos | f64 c_neg | u64 count
// followed by `count` 16-byte records:
//   f64 t | u16 x | u16 y | i8 p | 3 zero pad bytes
//
// Readers validate everything and report the byte offset / record index of
// the first violation.

void write_events(const events::EventStream& stream, const std::filesystem::path& path);
events::EventStream read_events(const std::filesystem::path& path);

// Plain-text alternative: one "t,x,y,p" line per event. Resolution and
// thresholds are not part of the text form and must be supplied.
void write_events_csv(const events::EventStream& stream, const std::filesystem::path& path);
events::EventStream read_events_csv(const std::filesystem::path& path, int width, int height,
                                    events::Thresholds thresholds);

// ---- rasters ----------------------------------------------------------------

// Binary 16-bit PGM (P5, maxval 65535); values clamped to [0, 1].
void write_pgm16(const Image& image, const std::filesystem::path& path);
Image read_pgm16(const std::filesystem::path& path);

// 8-bit RGB PNG.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major RGB triples

  std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
};

void write_png(const Rgb8Image& image, const std::filesystem::path& path);
Rgb8Image read_png(const std::filesystem::path& path);

// Signed count frame -> red (positive) / blue (negative) visualization with
// channel intensity min(|count|, cap) / cap. Decoding inverts it up to the cap.
Rgb8Image event_frame_to_rgb(const events::EventCountFrame& frame, int cap);
events::EventCountFrame rgb_to_event_frame(const Rgb8Image& image, int cap);

// NPY v1.0, float64 C-order, shape (height, width); the raw-array dump format.
void write_npy(const std::vector<double>& values, int height, int width,
               const std::filesystem::path& path);

// ---- misc -------------------------------------------------------------------

std::uint64_t fnv1a_file(const std::filesystem::path& path);

}  // namespace evrf::io
