// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "hsplat/core/gaussian_math.hpp"
#include "hsplat/core/types.hpp"

namespace hsplat {

// Flat per-Gaussian arrays frozen at a single timestep. Raw parameters are
// kept alongside the derived covariance/opacity so the backward pass can
// chain gradients all the way to the stored parameterization.
struct GaussianSnapshot {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Vector4d> rotations;      // quaternions, pre-normalization
  std::vector<Eigen::Vector3d> log_scales;
  std::vector<double> opacity_logits;
  std::vector<Eigen::Vector3d> sh;             // n * sh_coeff_count(sh_degree), block per Gaussian
  std::vector<double> payload;                 // scalar channel, one value per Gaussian
  int sh_degree = 1;

  // Derived, filled by finalize().
  std::vector<Eigen::Matrix3d> cov3d;
  std::vector<double> opacities;               // post-sigmoid

  int count() const { return static_cast<int>(positions.size()); }
  void finalize();       // recomputes cov3d/opacities; throws on length mismatch
  void validate() const; // lengths equal, finalize() done
};

GaussianSnapshot make_snapshot(std::span<const Gaussian3D> gaussians, int sh_degree);

struct RenderOptions {
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  int sh_degree = -1;        // -1 = snapshot's degree; lower values drop bands
  bool payload = false;      // splat the scalar payload channel
};

struct RenderOutput {
  ImageD color;              // H x W x 3
  ImageD alpha;              // H x W
  ImageD depth;              // H x W, alpha-weighted expected depth
  ImageD scalar;             // H x W when payload enabled, else empty
  Image<int> contrib_count;  // H x W
  int skipped_gaussians = 0; // degenerate 2D covariance (det <= 1e-12)
};

// dLoss/dRenderOutput. Empty images count as zero gradients; non-empty ones
// must match the render size.
struct UpstreamGrad {
  ImageD color;
  ImageD alpha;
  ImageD depth;
  ImageD scalar;
};

struct RenderGrads {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Vector4d> rotations;
  std::vector<Eigen::Vector3d> log_scales;
  std::vector<double> opacity_logits;
  std::vector<Eigen::Vector3d> sh;
  std::vector<double> payload;
};

// Tile-based forward splatting: front-to-back alpha compositing in ascending
// center-depth order (global index breaks ties), 3-sigma footprint cutoff,
// per-pixel termination once transmittance drops below 1/255. Deterministic
// and bit-identical for any worker count.
RenderOutput render(const GaussianSnapshot& snapshot, const CameraPose& pose,
                    const RenderOptions& options = {});

// Reference renderer: identical math, no tiling and no early termination.
// Kept serial on purpose; used as the correctness oracle for `render`.
RenderOutput brute_force_render(const GaussianSnapshot& snapshot, const CameraPose& pose,
                                const RenderOptions& options = {});

// Reverse-mode pass matching `render`. Gradient accumulation is chunked per
// tile and merged in fixed tile order, so results are bit-identical for any
// worker count.
RenderGrads render_backward(const GaussianSnapshot& snapshot, const CameraPose& pose,
                            const RenderOptions& options, const UpstreamGrad& upstream);

inline constexpr int kTileSize = 16;
inline constexpr double kMinTransmittance = 1.0 / 255.0;
inline constexpr double kMinAlphaContrib = 1.0 / 255.0;
inline constexpr double kMaxAlphaContrib = 0.99;
inline constexpr double kDegenerateDet = 1e-12;

}  // namespace hsplat
