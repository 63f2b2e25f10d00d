// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "hsplat/core/types.hpp"
#include "hsplat/nn/adam.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {

// Per-parameter-group learning rates for splat optimization. The position
// rate is multiplied by the scene scale so its effective step is metric.
struct GaussianLearningRates {
  double position = 1.6e-4;
  double rotation = 1e-3;
  double log_scale = 5e-3;
  double opacity = 5e-2;
  double sh = 2.5e-3;
};

// One Adam state per parameter group over a Gaussian set. Groups update
// independently; pruning compacts the moment vectors so surviving Gaussians
// keep their optimizer history.
struct GaussianAdam {
  AdamState position, rotation, log_scale, opacity, sh;
  int sh_coeffs = 0;

  GaussianAdam() = default;
  GaussianAdam(std::int64_t count, int sh_coeff_count);

  void step(std::vector<Gaussian3D>& gaussians, const RenderGrads& grads,
            const GaussianLearningRates& lr, double scene_scale);
  void compact(const std::vector<std::int64_t>& keep);
};

// Removes Gaussians with sigmoid(opacity_logit) < min_alpha. Returns the old
// indices of the survivors in order; the caller compacts optimizer state and
// any parallel arrays with it.
std::vector<std::int64_t> prune_low_opacity(std::vector<Gaussian3D>& gaussians,
                                            double min_alpha);

// Reorders `values` to the subset `keep` (old indices, new order).
template <class T>
void compact_by_keep(std::vector<T>& values, const std::vector<std::int64_t>& keep) {
  std::vector<T> kept;
  kept.reserve(keep.size());
  for (std::int64_t i : keep) kept.push_back(values[static_cast<size_t>(i)]);
  values.swap(kept);
}

}  // namespace hsplat
