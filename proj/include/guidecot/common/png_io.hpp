// Copyright 2026 The GuideCoT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <png.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/raster.hpp"

namespace guidecot::png {

/// Palette-index raster as stored in a paletted PNG.
struct IndexedImage {
  int height{0};
  int width{0};
  std::vector<std::uint8_t> indices;
  std::vector<std::array<std::uint8_t, 3>> palette;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  return f;
}

[[noreturn]] inline void on_error(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::io, std::string("libpng: ") + msg);
}
inline void on_warning(png_structp, png_const_charp) {}

class Reader {
 public:
  explicit Reader(const std::string& path) : file_(open(path, "rb")) {
    std::array<unsigned char, 8> sig{};
    if (std::fread(sig.data(), 1, sig.size(), file_.get()) != sig.size() || png_sig_cmp(sig.data(), 0, 8) != 0) {
      throw Error(ErrorCode::io, "'" + path + "' is not a PNG file");
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
    png_set_sig_bytes(png_, 8);
    png_read_info(png_, info_);
  }
  ~Reader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }

  std::vector<std::uint8_t> read_rows(std::size_t row_bytes, int height) {
    std::vector<std::uint8_t> buffer(row_bytes * static_cast<std::size_t>(height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) rows[static_cast<std::size_t>(r)] = buffer.data() + row_bytes * r;
    png_read_image(png_, rows.data());
    png_read_end(png_, nullptr);
    return buffer;
  }

 private:
  FilePtr file_;
  png_structp png_{nullptr};
  png_infop info_{nullptr};
};

class Writer {
 public:
  explicit Writer(const std::string& path) : file_(open(path, "wb")) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    info_ = png_create_info_struct(png_);
    png_init_io(png_, file_.get());
  }
  /// Encodes into `sink` instead of a file.
  explicit Writer(std::vector<std::uint8_t>* sink) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    info_ = png_create_info_struct(png_);
    png_set_write_fn(
        png_, sink,
        [](png_structp p, png_bytep data, png_size_t n) {
          auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
          out->insert(out->end(), data, data + n);
        },
        [](png_structp) {});
  }
  ~Writer() { png_destroy_write_struct(&png_, &info_); }
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }

  void write_rows(std::vector<std::uint8_t>& buffer, std::size_t row_bytes, int height) {
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) rows[static_cast<std::size_t>(r)] = buffer.data() + row_bytes * r;
    png_write_info(png_, info_);
    png_write_image(png_, rows.data());
    png_write_end(png_, nullptr);
  }

 private:
  FilePtr file_;
  png_structp png_{nullptr};
  png_infop info_{nullptr};
};

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace detail

/// Reads any PNG as a 3-channel planar image with values in [0, 1].
inline Image read_rgb(const std::string& path) {
  detail::Reader reader(path);
  png_structp p = reader.png();
  png_infop info = reader.info();
  const int width = static_cast<int>(png_get_image_width(p, info));
  const int height = static_cast<int>(png_get_image_height(p, info));
  const int color_type = png_get_color_type(p, info);
  if (png_get_bit_depth(p, info) == 16) png_set_strip_16(p);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(p);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_expand_gray_1_2_4_to_8(p);
    png_set_gray_to_rgb(p);
  }
  if (png_get_valid(p, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(p);
  png_set_strip_alpha(p);
  png_read_update_info(p, info);
  const std::size_t row_bytes = png_get_rowbytes(p, info);
  const auto buffer = reader.read_rows(row_bytes, height);
  Image out(3, height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(ch, r, c) = buffer[row_bytes * r + static_cast<std::size_t>(c) * 3 + ch] / 255.0;
      }
    }
  }
  return out;
}

/// Writes channels 0..2 (or a single channel as gray) as an 8-bit PNG.
namespace detail {

inline void require_writable(const Image& image) {
  if (image.channels() != 3 && image.channels() != 1) {
    throw Error(ErrorCode::dimension, "write_rgb expects 1 or 3 channels");
  }
}

inline void write_rgb_to(Writer& writer, const Image& image) {
  const int h = image.height();
  const int w = image.width();
  const int ch_count = image.channels();
  png_set_IHDR(writer.png(), writer.info(), static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               ch_count == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * ch_count;
  std::vector<std::uint8_t> buffer(row_bytes * static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < ch_count; ++ch) {
        buffer[row_bytes * r + static_cast<std::size_t>(c) * ch_count + ch] = to_byte(image.at(ch, r, c));
      }
    }
  }
  writer.write_rows(buffer, row_bytes, h);
}

}  // namespace detail

inline void write_rgb(const std::string& path, const Image& image) {
  detail::require_writable(image);
  detail::Writer writer(path);
  detail::write_rgb_to(writer, image);
}

/// PNG bytes of a 1- or 3-channel image.
inline std::vector<std::uint8_t> encode_rgb(const Image& image) {
  detail::require_writable(image);
  std::vector<std::uint8_t> out;
  {
    detail::Writer writer(&out);
    detail::write_rgb_to(writer, image);
  }
  return out;
}

/// Reads a paletted PNG keeping the raw palette indices.
inline IndexedImage read_indexed(const std::string& path) {
  detail::Reader reader(path);
  png_structp p = reader.png();
  png_infop info = reader.info();
  if (png_get_color_type(p, info) != PNG_COLOR_TYPE_PALETTE) {
    throw Error(ErrorCode::io, "'" + path + "' is not a paletted PNG");
  }
  IndexedImage out;
  out.width = static_cast<int>(png_get_image_width(p, info));
  out.height = static_cast<int>(png_get_image_height(p, info));
  png_colorp palette = nullptr;
  int num_palette = 0;
  png_get_PLTE(p, info, &palette, &num_palette);
  for (int i = 0; i < num_palette; ++i) out.palette.push_back({palette[i].red, palette[i].green, palette[i].blue});
  if (png_get_bit_depth(p, info) < 8) png_set_packing(p);
  png_read_update_info(p, info);
  const std::size_t row_bytes = png_get_rowbytes(p, info);
  auto buffer = reader.read_rows(row_bytes, out.height);
  out.indices.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) {
    std::copy_n(buffer.begin() + static_cast<std::ptrdiff_t>(row_bytes * r), out.width,
                out.indices.begin() + static_cast<std::ptrdiff_t>(r) * out.width);
  }
  return out;
}

inline void write_indexed(const std::string& path, const IndexedImage& image) {
  if (image.palette.empty() || image.palette.size() > 256) {
    throw Error(ErrorCode::dimension, "palette must hold 1..256 entries");
  }
  detail::Writer writer(path);
  png_set_IHDR(writer.png(), writer.info(), static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> palette;
  for (const auto& rgb : image.palette) palette.push_back({rgb[0], rgb[1], rgb[2]});
  png_set_PLTE(writer.png(), writer.info(), palette.data(), static_cast<int>(palette.size()));
  auto buffer = image.indices;
  writer.write_rows(buffer, static_cast<std::size_t>(image.width), image.height);
}

}  // namespace guidecot::png
