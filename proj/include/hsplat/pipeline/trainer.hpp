// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "hsplat/core/types.hpp"
#include "hsplat/dynamics/scene.hpp"
#include "hsplat/pipeline/config.hpp"

namespace hsplat {

struct HybridTrainReport {
  std::vector<double> loss_history;
  bool diverged = false;
  int iterations_run = 0;
  size_t static_start = 0, static_end = 0;
  size_t dynamic_start = 0, dynamic_end = 0;
};

// Joint refinement of a partitioned scene: static set, dynamic canonical set,
// and the deformation field step together against the training frames
// (round-robin). A non-finite loss stops the loop and leaves the scene at the
// last finite state instead of throwing; callers inspect `diverged`.
HybridTrainReport optimize_hybrid(HybridScene& scene, const ReferenceBundle& bundle,
                                  const PipelineConfig& cfg);

// Full pipeline: initialize from the bundle's geometry, fit a static-only
// model, score and group the residual motion, partition, then jointly refine.
// Holdout frames are excluded from every fitting stage. When `metrics` is
// non-null a per-stage summary (counts, losses, PSNR on training frames) is
// written into it.
HybridScene generate_scene(const ReferenceBundle& bundle, const PipelineConfig& cfg,
                           nlohmann::json* metrics = nullptr);

}  // namespace hsplat
