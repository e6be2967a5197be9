// Copyright 2026 The vidalign Authors
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

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "vidalign/core/error.hpp"
#include "vidalign/core/tensor.hpp"

namespace vidalign::dataset {

/// 8-bit interleaved RGB image.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::uint8_t& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

using Color = std::array<std::uint8_t, 3>;

inline void write_png(const Image& img, const std::filesystem::path& path) {
  png_image info;
  std::memset(&info, 0, sizeof(info));
  info.version = PNG_IMAGE_VERSION;
  info.width = static_cast<png_uint_32>(img.width);
  info.height = static_cast<png_uint_32>(img.height);
  info.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&info, path.string().c_str(), 0, img.rgb.data(), 0, nullptr))
    throw DataError("cannot write PNG '" + path.string() + "': " + info.message);
}

inline Image read_png(const std::filesystem::path& path) {
  png_image info;
  std::memset(&info, 0, sizeof(info));
  info.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&info, path.string().c_str()))
    throw DataError("cannot read PNG '" + path.string() + "': " + info.message);
  info.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(info.height), static_cast<int>(info.width));
  if (!png_image_finish_read(&info, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&info);
    throw DataError("cannot decode PNG '" + path.string() + "': " + info.message);
  }
  return img;
}

/// ImageNet channel statistics applied to [0,1] intensities.
inline constexpr std::array<double, 3> kImageMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageStd{0.229, 0.224, 0.225};

/// Normalized 3 x H x W planar tensor of one image.
template <typename T>
Tensor<T> to_tensor(const Image& img) {
  Tensor<T> t(1, 3, img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t(0, c, y, x) = static_cast<T>((img.at(y, x, c) / 255.0 - kImageMean[c]) / kImageStd[c]);
  return t;
}

/// Bilinear resize (pixel-center aligned).
inline Image resize(const Image& src, int out_h, int out_w) {
  if (src.height == out_h && src.width == out_w) return src;
  Image dst(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h, sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, src.height - 1);
    const double ly = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, src.width - 1);
      const double lx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - ly) * ((1 - lx) * src.at(y0, x0, c) + lx * src.at(y0, x1, c)) +
                         ly * ((1 - lx) * src.at(y1, x0, c) + lx * src.at(y1, x1, c));
        dst.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return dst;
}

// ---- drawing -------------------------------------------------------------

inline void put_pixel(Image& img, int y, int x, const Color& color) {
  if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
  for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
}

inline void fill_rect(Image& img, int x1, int y1, int x2, int y2, const Color& color) {
  for (int y = std::max(0, y1); y < std::min(img.height, y2); ++y)
    for (int x = std::max(0, x1); x < std::min(img.width, x2); ++x) put_pixel(img, y, x, color);
}

/// Outline of the half-open box [x1, x2) x [y1, y2).
inline void draw_rect(Image& img, int x1, int y1, int x2, int y2, const Color& color, int thickness = 1) {
  for (int t = 0; t < thickness; ++t) {
    for (int x = x1 + t; x < x2 - t; ++x) {
      put_pixel(img, y1 + t, x, color);
      put_pixel(img, y2 - 1 - t, x, color);
    }
    for (int y = y1 + t; y < y2 - t; ++y) {
      put_pixel(img, y, x1 + t, color);
      put_pixel(img, y, x2 - 1 - t, color);
    }
  }
}

/// 3x5 glyphs for digits, '.', '%' and a few letters; bit 2 is the left column.
inline const std::array<std::uint8_t, 5>* glyph(char ch) {
  static const std::array<std::array<std::uint8_t, 5>, 10> digits{{
      {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
      {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
  }};
  static const std::array<std::uint8_t, 5> dot{0, 0, 0, 0, 2}, percent{5, 1, 2, 4, 5}, dash{0, 0, 7, 0, 0};
  static const std::array<std::uint8_t, 5> S{7, 4, 7, 1, 7}, M{5, 7, 7, 5, 5}, F{7, 4, 6, 4, 4};
  if (ch >= '0' && ch <= '9') return &digits[ch - '0'];
  switch (ch) {
    case '.': return &dot;
    case '%': return &percent;
    case '-': return &dash;
    case 'S': return &S;
    case 'M': return &M;
    case 'F': return &F;
    default: return nullptr;
  }
}

/// Draw text with the built-in 3x5 font at integer `scale`; unknown glyphs
/// advance as blanks.
inline void draw_text(Image& img, int x, int y, const std::string& text, const Color& color, int scale = 1) {
  for (char ch : text) {
    if (const auto* g = glyph(ch)) {
      for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 3; ++col)
          if ((*g)[row] & (4 >> col))
            fill_rect(img, x + col * scale, y + row * scale, x + (col + 1) * scale, y + (row + 1) * scale, color);
    }
    x += 4 * scale;
  }
}

}  // namespace vidalign::dataset
