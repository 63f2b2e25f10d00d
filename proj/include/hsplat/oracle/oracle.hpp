// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hsplat/core/types.hpp"

namespace hsplat {

enum class PrimitiveKind { plane, box, sphere };
enum class AlbedoPattern { solid, checker, gradient };
enum class MotionKind { none, linear, circular };

// Analytic scene element. `size` is interpreted per kind: plane = in-plane
// half-extents (x, y); box = half-extents; sphere = radius in size[0].
struct OraclePrimitive {
  PrimitiveKind kind = PrimitiveKind::sphere;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation = Eigen::Vector4d(1, 0, 0, 0);  // local-to-world
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  AlbedoPattern pattern = AlbedoPattern::solid;
  Eigen::Vector3d color_a = Eigen::Vector3d(0.7, 0.7, 0.7);
  Eigen::Vector3d color_b = Eigen::Vector3d(0.2, 0.2, 0.2);
  double checker_period = 0.5;  // meters, local frame
  MotionKind motion = MotionKind::none;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();      // m/frame (linear)
  Eigen::Vector3d orbit_center = Eigen::Vector3d::Zero();  // circular path
  Eigen::Vector3d orbit_axis = Eigen::Vector3d(0, 1, 0);
  double angular_speed = 0.0;  // rad/frame

  bool dynamic() const { return motion != MotionKind::none; }
  // Animated center at continuous frame time t.
  Eigen::Vector3d center_at(double t) const;
};

struct JitterSpec {
  double sigma_rot = 0.0;    // radians, per-frame rigid perturbation
  double sigma_trans = 0.0;  // meters
  double sigma_px = 0.0;     // per-pixel warp magnitude
};

struct OracleSceneSpec {
  std::vector<OraclePrimitive> primitives;
  std::vector<CameraPose> trajectory;  // one pose per frame, t = index
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  int feature_dim = 8;  // >= 6: rgb, gradient, pixel coords, id hash dims
  JitterSpec jitter;

  // T >= 2, positive sizes, non-negative sigmas, feature_dim >= 6.
  void validate() const;
};

std::string spec_to_json(const OracleSceneSpec& spec);
OracleSceneSpec spec_from_json(const std::string& json_text);

// Result of one analytic ray cast.
struct RayHit {
  bool hit = false;
  double depth = 0.0;  // camera-frame z of the hit
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  int primitive = -1;
};

// First intersection along the pixel ray of `pose` at frame time t.
RayHit trace_ray(const OracleSceneSpec& spec, const CameraPose& pose, double t, double px,
                 double py);

// Renders every frame with the independent analytic renderer and packs the
// result as a reference bundle with ground-truth dynamic masks. Jitter (when
// enabled) perturbs rendered images, point maps, and feature maps; poses and
// masks always describe the nominal geometry.
ReferenceBundle generate_bundle(const OracleSceneSpec& spec, std::uint64_t seed);

}  // namespace hsplat
