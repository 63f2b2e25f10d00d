// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/core/image.hpp"

#include <cmath>

namespace hsplat {

ImageU8 quantize_u8(const ImageD& img) {
  ImageU8 out(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    double v = std::round(img.data[i] * 255.0);
    out.data[i] = static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
  }
  return out;
}

ImageD dequantize_u8(const ImageU8& img) {
  ImageD out(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = img.data[i] / 255.0;
  }
  return out;
}

}  // namespace hsplat
