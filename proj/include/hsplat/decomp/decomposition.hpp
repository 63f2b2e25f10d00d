// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsplat/core/types.hpp"
#include "hsplat/nn/mlp.hpp"
#include "hsplat/pipeline/param_groups.hpp"

namespace hsplat {

// Per-view photometric residuals between a static render and its reference.
struct ErrorMapSet {
  std::vector<ImageD> raw;         // H x W x 3 per-channel absolute difference
  std::vector<ImageD> normalized;  // H x W x 1 in [0, 1]
};

// normalized = channel mean of the absolute difference, 3x3 box blurred
// (in-bounds taps averaged), rescaled by the per-frame 99th percentile and
// clamped to [0, 1]. An all-zero difference stays all-zero.
ErrorMapSet compute_error_maps(const std::vector<ImageD>& renders,
                               const std::vector<ImageD>& references);

// Net mapping [position / scene_scale ; feature] to a dynamic score in (0,1).
struct ScoreField {
  MlpSpec spec;
  MlpParams params;
  double scene_scale = 1.0;
  int feature_dim = 0;
};

ScoreField make_score_field(int feature_dim, double scene_scale, std::uint64_t seed,
                            int hidden = 64);

std::vector<double> eval_score_field(const ScoreField& field,
                                     std::span<const Gaussian3D> gaussians);

// Binary cross-entropy between the alpha-splatted score image at `pose` and
// `target` (H x W x 1). Gaussian geometry is consumed as-is; when grads is
// non-null, d loss / d field params is accumulated into it.
double score_splat_bce(const ScoreField& field, std::span<const Gaussian3D> gaussians,
                       const CameraPose& pose, const ImageD& target, MlpParams* grads);

struct ScoreTrainConfig {
  int iters = 300;
  double lr = 1e-3;
};

struct ScoreTrainReport {
  double initial_bce = 0;  // mean over the first supervision cycle
  double final_bce = 0;    // mean over the last supervision cycle
  int iterations = 0;
};

// Round-robin over the supervision views; frame_indices[i] pairs
// maps.normalized[i] with that bundle frame's pose. Writes the trained scores
// into gaussians[i].dynamic_score.
ScoreTrainReport train_score_field(ScoreField& field, std::vector<Gaussian3D>& gaussians,
                                   const ReferenceBundle& bundle, const ErrorMapSet& maps,
                                   const std::vector<int>& frame_indices,
                                   const ScoreTrainConfig& cfg);

// 1 = dynamic, assigned on score strictly greater than tau.
std::vector<std::uint8_t> threshold_split(std::span<const double> scores, double tau);

struct ClusterParams {
  double eps = 0;               // 0 = 3x median nearest-neighbor distance
  int min_pts = 8;              // neighborhood size making a core point (self included)
  double feature_weight = 0.25;
  double vote_threshold = 0.5;  // dynamic fraction strictly above flips the cluster dynamic
  double scene_scale = 1.0;
};

struct GroupingResult {
  std::vector<std::uint8_t> labels;  // post-vote
  std::vector<int> cluster_ids;      // -1 = noise
  int cluster_count = 0;
  int flipped = 0;
  double eps_used = 0;
};

// Density clustering over [position / scene_scale ; feature_weight * feature]
// followed by a per-cluster majority vote. Noise points keep their input
// labels. The automatic eps is measured on the normalized positions.
GroupingResult cluster_group(std::span<const Gaussian3D> gaussians,
                             std::span<const std::uint8_t> labels,
                             const ClusterParams& params);

struct PrepassConfig {
  int iters = 3000;
  GaussianLearningRates lr;
  double lambda_l1 = 1.0;
  double lambda_ssim = 1.0;
  int prune_interval = 500;      // 0 disables pruning
  double prune_min_alpha = 0.005;
  int sh_degree = 2;
  std::vector<int> frames;       // training frame indices; empty = all
};

struct PrepassReport {
  std::vector<double> loss_history;
  int start_count = 0;
  int end_count = 0;
  double final_loss_avg = 0;  // mean loss over the last supervision cycle
};

// Fits every Gaussian as time-independent against the selected frames with
// the L1 + SSIM objective, one frame per iteration round-robin. Throws
// std::runtime_error when the loss becomes non-finite.
PrepassReport optimize_static_prepass(std::vector<Gaussian3D>& gaussians,
                                      const ReferenceBundle& bundle, double scene_scale,
                                      const PrepassConfig& cfg);

}  // namespace hsplat
