#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evrf/io.hpp"

namespace evrf::io {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'D', '1'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 8 + 8;
constexpr std::size_t kRecordSize = 16;

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "serialization assumes little-endian host");
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

[[noreturn]] void bad(const std::string& what, std::size_t offset) {
  throw FormatError("EVD1: " + what + " at byte " + std::to_string(offset));
}

}  // namespace

void write_events(const events::EventStream& stream, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(kHeaderSize + stream.size() * kRecordSize);
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(stream.width()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(stream.height()));
  put<double>(buf, stream.thresholds().c_pos);
  put<double>(buf, stream.thresholds().c_neg);
  put<std::uint64_t>(buf, stream.size());
  for (const events::Event& e : stream.events()) {
    put<double>(buf, e.t);
    put<std::uint16_t>(buf, e.x);
    put<std::uint16_t>(buf, e.y);
    put<std::int8_t>(buf, e.p);
    buf.append(3, '\0');
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("EVD1: cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("EVD1: short write to " + path.string());
}

events::EventStream read_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("EVD1: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < kHeaderSize) bad("truncated header", buf.size());
  if (std::memcmp(buf.data(), kMagic, 4) != 0) bad("bad magic", 0);
  const auto width = get<std::uint32_t>(buf.data() + 4);
  const auto height = get<std::uint32_t>(buf.data() + 8);
  events::Thresholds thr{get<double>(buf.data() + 12), get<double>(buf.data() + 20)};
  const auto count = get<std::uint64_t>(buf.data() + 28);
  if (width == 0 || height == 0 || width > 65535 || height > 65535) bad("bad resolution", 4);
  if (!(thr.c_pos > 0.0) || !std::isfinite(thr.c_pos) || !(thr.c_neg < 0.0) || !std::isfinite(thr.c_neg))
    bad("bad thresholds", 12);
  if (buf.size() != kHeaderSize + count * kRecordSize)
    bad("payload size does not match event count " + std::to_string(count), buf.size());

  std::vector<events::Event> evs;
  evs.reserve(count);
  double prev_t = -1.0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const char* rec = buf.data() + kHeaderSize + i * kRecordSize;
    const std::size_t off = kHeaderSize + i * kRecordSize;
    events::Event e;
    e.t = get<double>(rec);
    e.x = get<std::uint16_t>(rec + 8);
    e.y = get<std::uint16_t>(rec + 10);
    e.p = get<std::int8_t>(rec + 12);
    if (rec[13] != 0 || rec[14] != 0 || rec[15] != 0)
      bad("nonzero padding in record " + std::to_string(i), off + 13);
    if (!std::isfinite(e.t) || e.t < 0.0) bad("bad timestamp in record " + std::to_string(i), off);
    if (e.t < prev_t) bad("timestamps decrease in record " + std::to_string(i), off);
    if (e.x >= width || e.y >= height) bad("coordinate overflow in record " + std::to_string(i), off + 8);
    if (e.p != 1 && e.p != -1) bad("bad polarity in record " + std::to_string(i), off + 12);
    prev_t = e.t;
    evs.push_back(e);
  }
  return events::EventStream(static_cast<int>(width), static_cast<int>(height), thr, std::move(evs));
}

void write_events_csv(const events::EventStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("CSV: cannot open " + path.string() + " for writing");
  out.precision(17);
  for (const events::Event& e : stream.events())
    out << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
  if (!out) throw FormatError("CSV: short write to " + path.string());
}

events::EventStream read_events_csv(const std::filesystem::path& path, int width, int height,
                                    events::Thresholds thresholds) {
  std::ifstream in(path);
  if (!in) throw FormatError("CSV: cannot open " + path.string());
  std::vector<events::Event> evs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t;
    long x, y, p;
    char c1, c2, c3;
    if (!(ss >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',')
      throw FormatError("CSV: malformed line " + std::to_string(line_no) + " in " + path.string());
    if (x < 0 || y < 0 || x > 65535 || y > 65535 || (p != 1 && p != -1))
      throw FormatError("CSV: bad event on line " + std::to_string(line_no));
    evs.push_back(events::Event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                static_cast<std::int8_t>(p)});
  }
  return events::EventStream(width, height, thresholds, std::move(evs));
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("hash: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char chunk[4096];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(chunk[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace evrf::io
