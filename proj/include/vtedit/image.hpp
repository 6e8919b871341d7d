// SPDX-License-Identifier: Apache-2.0
#pragma once

/// 8-bit raster images and binary PNM (P4/P5/P6) I/O.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vtedit/error.hpp"
#include "vtedit/jsonl.hpp"

namespace vtedit {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image&) const = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

/// Rec.601 luma of every pixel, unrounded.
inline std::vector<double> luma(const Image& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
  }
  return y;
}

namespace detail {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 1;
  std::size_t data_offset = 0;
};

inline PnmHeader parse_pnm_header(const std::string& bytes, const std::string& what) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    int v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
    }
    if (!any) throw Error(Errc::io_error, what + ": bad PNM header");
    return v;
  };
  if (bytes.size() < 2) throw Error(Errc::io_error, what + ": not a PNM file");
  h.magic = bytes.substr(0, 2);
  pos = 2;
  h.width = read_int();
  h.height = read_int();
  if (h.magic != "P4") h.maxval = read_int();
  if (pos >= bytes.size()) throw Error(Errc::io_error, what + ": truncated PNM");
  h.data_offset = pos + 1;  // single whitespace byte after the header
  if (h.width <= 0 || h.height <= 0) throw Error(Errc::io_error, what + ": empty image");
  return h;
}

}  // namespace detail

inline Image read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto h = detail::parse_pnm_header(bytes, path.string());
  if (h.magic != "P6" || h.maxval != 255) throw Error(Errc::io_error, path.string() + ": expected 8-bit P6");
  Image img(h.width, h.height);
  if (bytes.size() < h.data_offset + img.rgb.size()) throw Error(Errc::io_error, path.string() + ": truncated");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), img.rgb.size(), img.rgb.begin());
  return img;
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.rgb.begin(), img.rgb.end());
  write_file_atomic(path, out);
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto h = detail::parse_pnm_header(bytes, path.string());
  if (h.magic != "P5" || h.maxval > 255) throw Error(Errc::io_error, path.string() + ": expected 8-bit P5");
  GrayImage img(h.width, h.height);
  if (bytes.size() < h.data_offset + img.data.size()) throw Error(Errc::io_error, path.string() + ": truncated");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), img.data.size(), img.data.begin());
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.data.begin(), img.data.end());
  write_file_atomic(path, out);
}

/// 1-bit PBM; a set bit (1) marks a mask pixel.
inline void write_pbm(const std::filesystem::path& path, const GrayImage& bits) {
  std::string out = "P4\n" + std::to_string(bits.width) + " " + std::to_string(bits.height) + "\n";
  const int row_bytes = (bits.width + 7) / 8;
  for (int y = 0; y < bits.height; ++y) {
    for (int b = 0; b < row_bytes; ++b) {
      unsigned char byte = 0;
      for (int k = 0; k < 8; ++k) {
        int x = b * 8 + k;
        if (x < bits.width && bits.at(x, y)) byte |= static_cast<unsigned char>(0x80u >> k);
      }
      out.push_back(static_cast<char>(byte));
    }
  }
  write_file_atomic(path, out);
}

inline GrayImage read_pbm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto h = detail::parse_pnm_header(bytes, path.string());
  if (h.magic != "P4") throw Error(Errc::io_error, path.string() + ": expected P4");
  GrayImage img(h.width, h.height);
  const int row_bytes = (h.width + 7) / 8;
  if (bytes.size() < h.data_offset + static_cast<std::size_t>(row_bytes) * h.height) {
    throw Error(Errc::io_error, path.string() + ": truncated");
  }
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      auto byte = static_cast<unsigned char>(bytes[h.data_offset + static_cast<std::size_t>(y) * row_bytes + x / 8]);
      img.at(x, y) = (byte >> (7 - x % 8)) & 1u;
    }
  }
  return img;
}

}  // namespace vtedit
