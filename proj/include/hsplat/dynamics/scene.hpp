// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "hsplat/dynamics/deformation.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {

// A fitted scene: time-independent Gaussians plus canonical dynamic Gaussians
// driven by one shared deformation field.
struct HybridScene {
  std::vector<Gaussian3D> static_gaussians;
  std::vector<Gaussian3D> dynamic_gaussians;
  std::optional<DeformationField> deform;  // absent <=> dynamic set empty
  double time_min = 0;
  double time_max = 0;
  double scene_scale = 1.0;
  int sh_degree = 2;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  // Cluster assignment from the decomposition stage, parallel to the Gaussian
  // vectors; empty when the stage did not run.
  std::vector<int> static_cluster_ids;
  std::vector<int> dynamic_cluster_ids;

  int count() const {
    return static_cast<int>(static_gaussians.size() + dynamic_gaussians.size());
  }
  // Throws std::invalid_argument on representation violations.
  void validate() const;
};

// Snapshot at time t: the static block first (bit-identical for every t),
// then the dynamic block deformed to t. Payload carries each Gaussian's
// dynamic score. `extrapolated`, when non-null, reports t outside
// [time_min, time_max].
GaussianSnapshot compose_scene_at_t(const HybridScene& scene, double t,
                                    bool* extrapolated = nullptr);

}  // namespace hsplat
