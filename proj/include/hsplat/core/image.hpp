// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hsplat {

// Row-major H x W x C buffer, channel-interleaved. (0,0) is the top-left
// pixel.
template <class T>
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

  T& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const T& at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

using ImageD = Image<double>;
using ImageU8 = Image<std::uint8_t>;

inline void require_same_shape(const ImageD& a, const ImageD& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": image shape mismatch");
  }
}

// Bilinear sample of channel c at continuous pixel coordinate (x, y), where
// integer coordinates are sample points. Clamps to the image border.
template <class T>
double bilinear_sample(const Image<T>& img, double x, double y, int c) {
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  double fx = x - x0, fy = y - y0;
  int x1 = clampi(x0 + 1, 0, img.width - 1);
  int y1 = clampi(y0 + 1, 0, img.height - 1);
  x0 = clampi(x0, 0, img.width - 1);
  y0 = clampi(y0, 0, img.height - 1);
  double v00 = static_cast<double>(img.at(y0, x0, c));
  double v01 = static_cast<double>(img.at(y0, x1, c));
  double v10 = static_cast<double>(img.at(y1, x0, c));
  double v11 = static_cast<double>(img.at(y1, x1, c));
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

ImageU8 quantize_u8(const ImageD& img);
ImageD dequantize_u8(const ImageU8& img);

}  // namespace hsplat
