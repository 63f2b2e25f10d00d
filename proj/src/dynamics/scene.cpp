// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/dynamics/scene.hpp"

#include <stdexcept>

namespace hsplat {

void HybridScene::validate() const {
  if (!deform && !dynamic_gaussians.empty()) {
    throw std::invalid_argument("HybridScene: dynamic Gaussians without a deformation field");
  }
  if (deform) deform->validate();
  if (!(scene_scale > 0)) throw std::invalid_argument("HybridScene: scene_scale must be positive");
  if (time_max < time_min) throw std::invalid_argument("HybridScene: empty time range");
  if (sh_degree < 0 || sh_degree > 3) throw std::invalid_argument("HybridScene: sh_degree out of range");
  const size_t coeffs = static_cast<size_t>(sh_coeff_count(sh_degree));
  for (const auto* set : {&static_gaussians, &dynamic_gaussians}) {
    for (const Gaussian3D& g : *set) {
      if (g.sh_coeffs.size() < coeffs) {
        throw std::invalid_argument("HybridScene: Gaussian SH coefficients below sh_degree");
      }
    }
  }
  if (!static_cluster_ids.empty() && static_cluster_ids.size() != static_gaussians.size()) {
    throw std::invalid_argument("HybridScene: static cluster id count mismatch");
  }
  if (!dynamic_cluster_ids.empty() && dynamic_cluster_ids.size() != dynamic_gaussians.size()) {
    throw std::invalid_argument("HybridScene: dynamic cluster id count mismatch");
  }
}

GaussianSnapshot compose_scene_at_t(const HybridScene& scene, double t, bool* extrapolated) {
  scene.validate();
  if (extrapolated) *extrapolated = t < scene.time_min || t > scene.time_max;
  if (scene.dynamic_gaussians.empty()) {
    return make_snapshot(scene.static_gaussians, scene.sh_degree);
  }
  std::vector<Gaussian3D> combined = scene.static_gaussians;
  std::vector<Gaussian3D> deformed = apply_deformation(scene.dynamic_gaussians, *scene.deform, t);
  combined.insert(combined.end(), deformed.begin(), deformed.end());
  return make_snapshot(combined, scene.sh_degree);
}

}  // namespace hsplat
