// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "hsplat/core/image.hpp"

namespace hsplat {

// One splat. Rotation is stored (w, x, y, z); scales are log-meters with exp
// activation; opacity is a logit with sigmoid activation. sh_coeffs holds
// (degree+1)^2 RGB triples, band 0 first.
struct Gaussian3D {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation = Eigen::Vector4d(1, 0, 0, 0);
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  double opacity_logit = 0.0;
  std::vector<Eigen::Vector3d> sh_coeffs;
  Eigen::VectorXd feature;
  double dynamic_score = 0.0;
};

// Pinhole camera with a world-to-camera rigid transform. Camera frame is
// x-right, y-down, z-forward; the matrix is row-major in serialized form.
// Pixel (i, j) samples continuous image coordinate (u, v) = (i, j), so the
// optical axis projects to (cx, cy) in pixel units.
struct CameraPose {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Eigen::Matrix4d world_to_cam = Eigen::Matrix4d::Identity();
  int timestamp_index = 0;

  Eigen::Matrix3d rotation() const { return world_to_cam.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_cam.topRightCorner<3, 1>(); }
  // Camera center in world coordinates.
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }

  // Throws std::invalid_argument on broken intrinsics or a non-rigid
  // transform (rotation block must be orthonormal with determinant +1).
  void validate() const;
};

struct Frame {
  ImageD image;           // H x W x 3, values in [0,1]
  CameraPose pose;
  ImageD pointmap;        // H x W x 3 world-space points; invalid entries are NaN
  Image<std::uint8_t> validity;  // H x W, 1 = pointmap valid
  ImageD featmap;         // H x W x F
  std::optional<Image<std::uint8_t>> dyn_mask;  // H x W, 1 = dynamic (oracle ground truth)
};

struct ReferenceBundle {
  std::vector<Frame> frames;
  int feature_dim = 0;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  double scene_scale_hint = 0.0;  // 0 = not provided
  bool fallback_features = false; // features synthesized at ingest, not supplied

  int frame_count() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames[0].image.width; }
  int height() const { return frames.empty() ? 0 : frames[0].image.height; }

  // Shared shapes, strictly increasing timestamps 0..T-1. Throws on violation.
  void validate() const;
};

double sigmoid(double x);
double logit(double p);

}  // namespace hsplat
