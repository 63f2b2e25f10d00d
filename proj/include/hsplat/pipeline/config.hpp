// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsplat/decomp/decomposition.hpp"
#include "hsplat/pipeline/param_groups.hpp"

namespace hsplat {

// Everything the scene-generation run needs; one JSON document mirrors this
// with every field optional.
struct PipelineConfig {
  int sh_degree = 2;
  int init_pixel_stride = 1;
  int init_frame_stride = 1;
  int prepass_iters = 3000;
  int score_iters = 300;
  int hybrid_iters = 2000;
  GaussianLearningRates gaussian_lr;
  double score_lr = 1e-3;
  double deform_lr = 5e-4;
  double tau = 0.5;
  double cluster_eps = 0;  // 0 = automatic
  int cluster_min_pts = 8;
  double cluster_feature_weight = 0.25;
  double cluster_vote_threshold = 0.5;
  double lambda_l1 = 1.0;
  double lambda_ssim = 1.0;
  int prune_interval = 500;  // 0 disables pruning
  double prune_min_alpha = 0.005;
  std::uint64_t seed = 1;
  std::vector<int> holdout_frames;    // excluded from every stage
  bool force_all_dynamic = false;     // ablation: no decomposition, all time-dependent
  int deform_hidden = 128;
  int deform_depth = 4;
  int deform_pos_freqs = 8;
  int deform_time_freqs = 4;
  int score_hidden = 64;

  void validate() const;  // throws std::invalid_argument
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_config(const std::string& path);  // missing file -> error

}  // namespace hsplat
