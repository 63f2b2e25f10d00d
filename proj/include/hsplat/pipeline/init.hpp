// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hsplat/core/types.hpp"

namespace hsplat {

struct InitConfig {
  int pixel_stride = 1;     // sample every Nth pixel per axis
  int frame_stride = 1;     // sample every Nth frame
  int sh_degree = 2;
  double initial_alpha = 0.1;
  std::vector<int> skip_frames;  // excluded entirely (held-out views)
};

struct InitResult {
  std::vector<Gaussian3D> gaussians;
  double scene_scale = 0;  // median distance of seed points to their centroid
};

// Lifts valid pointmap pixels into one Gaussian each: position from the point
// map, flat band-0 color from the pixel, feature from the feature map,
// identity rotation, isotropic scale set to the mean distance to the 3
// nearest seeded neighbors. Throws std::invalid_argument when fewer than 100
// valid points survive sampling.
InitResult init_gaussians_from_bundle(const ReferenceBundle& bundle, const InitConfig& cfg);

}  // namespace hsplat
