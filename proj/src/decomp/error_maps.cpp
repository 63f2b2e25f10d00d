// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hsplat/decomp/decomposition.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {

ErrorMapSet compute_error_maps(const std::vector<ImageD>& renders,
                               const std::vector<ImageD>& references) {
  if (renders.size() != references.size()) {
    throw std::invalid_argument("compute_error_maps: frame count mismatch");
  }
  ErrorMapSet out;
  out.raw.resize(renders.size());
  out.normalized.resize(renders.size());
  for (size_t f = 0; f < renders.size(); ++f) {
    const ImageD& a = renders[f];
    const ImageD& b = references[f];
    require_same_shape(a, b, "compute_error_maps");
    if (a.channels != 3) throw std::invalid_argument("compute_error_maps: need RGB images");
    const int h = a.height, w = a.width;

    ImageD& raw = out.raw[f];
    raw = ImageD(h, w, 3);
    for (size_t i = 0; i < raw.data.size(); ++i) {
      raw.data[i] = std::abs(a.data[i] - b.data[i]);
    }

    ImageD mean(h, w, 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        mean.at(y, x) = (raw.at(y, x, 0) + raw.at(y, x, 1) + raw.at(y, x, 2)) / 3.0;
      }
    }

    // 3x3 box blur averaging the in-bounds taps, so borders keep their level.
    ImageD blurred(h, w, 1);
    parallel_for(h, [&](std::int64_t y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0;
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = static_cast<int>(y) + dy;
          if (yy < 0 || yy >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= w) continue;
            sum += mean.at(yy, xx);
            ++count;
          }
        }
        blurred.at(static_cast<int>(y), x) = sum / count;
      }
    });

    std::vector<double> sorted = blurred.data;
    const size_t rank = static_cast<size_t>(
        std::llround(0.99 * static_cast<double>(sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank),
                     sorted.end());
    const double p99 = sorted[rank];

    ImageD& norm = out.normalized[f];
    norm = ImageD(h, w, 1);
    if (p99 > 1e-12) {
      for (size_t i = 0; i < norm.data.size(); ++i) {
        norm.data[i] = std::clamp(blurred.data[i] / p99, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace hsplat
