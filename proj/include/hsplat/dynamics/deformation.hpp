// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsplat/core/types.hpp"
#include "hsplat/nn/mlp.hpp"

namespace hsplat {

// Shared offset network: positionally encoded (position / scene_scale,
// t / time_scale) to (dx, dr, ds). The last layer starts at zero, so an
// untrained field is the identity deformation everywhere.
struct DeformationField {
  MlpSpec spec;
  MlpParams params;
  int pos_freqs = 8;
  int time_freqs = 4;
  double scene_scale = 1.0;
  double time_scale = 1.0;

  int input_dim() const;
  void validate() const;  // throws when spec/params disagree with the fields
};

DeformationField make_deformation_field(double scene_scale, double time_scale,
                                        std::uint64_t seed, int hidden = 128,
                                        int depth = 4, int pos_freqs = 8,
                                        int time_freqs = 4);

struct DeformDelta {
  Eigen::Vector3d dx = Eigen::Vector3d::Zero();
  Eigen::Vector4d dr = Eigen::Vector4d::Zero();
  Eigen::Vector3d ds = Eigen::Vector3d::Zero();
};

// Batch offsets at continuous time t. Throws std::invalid_argument on
// non-finite positions.
std::vector<DeformDelta> deform(const DeformationField& field,
                                std::span<const Eigen::Vector3d> positions, double t);

// Forward state kept for the backward pass, one entry per position.
struct DeformCache {
  std::vector<MlpCache> mlp;
  std::vector<Eigen::Vector3d> pos_norm;  // position / scene_scale
  double t_norm = 0;
};

std::vector<DeformDelta> deform_with_cache(const DeformationField& field,
                                           std::span<const Eigen::Vector3d> positions,
                                           double t, DeformCache& cache);

// Accumulates d loss / d params into param_grads from upstream offset
// gradients. When g_positions is non-null, the pullback through the encoded
// position input is added to it (the caller owns the identity term of
// x + dx(x, t)).
void deform_backward(const DeformationField& field, const DeformCache& cache,
                     std::span<const DeformDelta> g_deltas, MlpParams& param_grads,
                     std::vector<Eigen::Vector3d>* g_positions);

// position += dx; rotation += dr then renormalized; log_scale += ds. Opacity,
// color, feature, and score are untouched.
Gaussian3D apply_delta(const Gaussian3D& g, const DeformDelta& d);

std::vector<Gaussian3D> apply_deformation(std::span<const Gaussian3D> canonical,
                                          const DeformationField& field, double t);

}  // namespace hsplat
