#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "evrf/io.hpp"

namespace evrf::io {

void write_pgm16(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("PGM: cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << " " << image.height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 2);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      double v = std::clamp(image.at(x, y), 0.0, 1.0);
      auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      row[static_cast<std::size_t>(x) * 2] = static_cast<unsigned char>(q >> 8);  // PGM is big-endian
      row[static_cast<std::size_t>(x) * 2 + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw FormatError("PGM: short write to " + path.string());
}

Image read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("PGM: cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 65535)
    throw FormatError("PGM: unsupported header in " + path.string());
  in.get();  // single whitespace after maxval
  Image img(width, height);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw FormatError("PGM: truncated payload in " + path.string());
    for (int x = 0; x < width; ++x) {
      std::uint16_t q = static_cast<std::uint16_t>((row[static_cast<std::size_t>(x) * 2] << 8) |
                                                   row[static_cast<std::size_t>(x) * 2 + 1]);
      img.at(x, y) = static_cast<double>(q) / 65535.0;
    }
  }
  return img;
}

void write_png(const Rgb8Image& image, const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw FormatError("PNG: cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw FormatError("PNG: write failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.data.data() + static_cast<std::size_t>(y) * image.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Rgb8Image read_png(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw FormatError("PNG: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(fp);
    throw FormatError("PNG: read failed for " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Rgb8Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.width * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

Rgb8Image event_frame_to_rgb(const events::EventCountFrame& frame, int cap) {
  if (cap <= 0 || cap > 255) throw ArgumentError("event_frame_to_rgb: cap must be in [1, 255]");
  Rgb8Image img;
  img.width = frame.width;
  img.height = frame.height;
  img.data.assign(static_cast<std::size_t>(frame.width) * frame.height * 3, 0);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const std::int32_t n = frame.at(x, y);
      if (n == 0) continue;
      const int mag = std::min(std::abs(n), cap);
      const auto level = static_cast<std::uint8_t>(std::lround(255.0 * mag / cap));
      img.pixel(x, y)[n > 0 ? 0 : 2] = level;  // red positive, blue negative
    }
  }
  return img;
}

events::EventCountFrame rgb_to_event_frame(const Rgb8Image& image, int cap) {
  if (cap <= 0 || cap > 255) throw ArgumentError("rgb_to_event_frame: cap must be in [1, 255]");
  events::EventCountFrame frame{image.width, image.height, {}, {}};
  frame.counts.resize(static_cast<std::size_t>(image.width) * image.height, 0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* px = image.pixel(x, y);
      if (px[0] > 0)
        frame.counts[static_cast<std::size_t>(y) * image.width + x] =
            static_cast<std::int32_t>(std::lround(px[0] / 255.0 * cap));
      else if (px[2] > 0)
        frame.counts[static_cast<std::size_t>(y) * image.width + x] =
            -static_cast<std::int32_t>(std::lround(px[2] / 255.0 * cap));
    }
  }
  return frame;
}

void write_npy(const std::vector<double>& values, int height, int width,
               const std::filesystem::path& path) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw ArgumentError("npy: value count does not match shape");
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" + std::to_string(height) +
                       ", " + std::to_string(width) + "), }";
  std::size_t total = 10 + header.size() + 1;
  std::size_t pad = (64 - total % 64) % 64;
  header.append(pad, ' ');
  header.push_back('\n');
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("npy: cannot open " + path.string() + " for writing");
  const unsigned char preamble[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.write(reinterpret_cast<const char*>(preamble), 8);
  auto hlen = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&hlen), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw FormatError("npy: short write to " + path.string());
}

}  // namespace evrf::io
