// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hsplat/core/types.hpp"
#include "hsplat/dynamics/scene.hpp"
#include "hsplat/pipeline/losses.hpp"

namespace hsplat {

// 10 * log10(1 / MSE) over all channels, +inf for identical images. Values
// are expected in [0, 1].
double psnr(const ImageD& a, const ImageD& b);

struct IouReport {
  double mean_iou = 0;
  std::vector<double> per_frame;
  std::vector<int> frame_indices;  // frames that carried ground-truth masks
};

// Splats the static/dynamic membership as a payload per frame, thresholds the
// splatted value at 0.5, and intersects with the frame's ground-truth mask.
// Frames without masks are skipped; both masks empty counts as IoU 1. Throws
// when no frame has a mask.
IouReport decomposition_iou(const HybridScene& scene, const ReferenceBundle& bundle);

}  // namespace hsplat
