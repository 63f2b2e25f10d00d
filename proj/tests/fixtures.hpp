// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "hsplat/oracle/oracle.hpp"

namespace hsplat::fixtures {

// Camera with identity orientation at `center` (x right, y down, z forward).
inline CameraPose camera_at(const Eigen::Vector3d& center, int size, double f, int t = 0) {
  CameraPose pose;
  pose.fx = pose.fy = f;
  pose.cx = pose.cy = size / 2.0;
  pose.width = pose.height = size;
  pose.world_to_cam.topRightCorner<3, 1>() = -center;
  pose.timestamp_index = t;
  return pose;
}

// Gently weaving forward ego trajectory, driving-scene style.
inline std::vector<CameraPose> forward_trajectory(int frames, int size, double f) {
  std::vector<CameraPose> traj;
  for (int i = 0; i < frames; ++i) {
    const double s = frames > 1 ? static_cast<double>(i) / (frames - 1) : 0.0;
    const Eigen::Vector3d c(0.25 * std::sin(2.0 * M_PI * s), 0.0, 1.5 * s);
    traj.push_back(camera_at(c, size, f, i));
  }
  return traj;
}

inline OraclePrimitive ground_plane() {
  OraclePrimitive p;
  p.kind = PrimitiveKind::plane;
  p.position = Eigen::Vector3d(0, 1.2, 5.0);
  const double s = std::sqrt(0.5);
  p.rotation = Eigen::Vector4d(s, -s, 0, 0);  // normal along world -y (up)
  p.size = Eigen::Vector3d(8, 8, 1);
  p.pattern = AlbedoPattern::checker;
  p.checker_period = 0.9;
  p.color_a = Eigen::Vector3d(0.55, 0.52, 0.48);
  p.color_b = Eigen::Vector3d(0.28, 0.3, 0.33);
  return p;
}

inline OraclePrimitive back_wall() {
  OraclePrimitive p;
  p.kind = PrimitiveKind::plane;
  p.position = Eigen::Vector3d(0, -0.8, 9.0);
  p.size = Eigen::Vector3d(8, 3.2, 1);
  p.pattern = AlbedoPattern::checker;
  p.checker_period = 1.1;
  p.color_a = Eigen::Vector3d(0.7, 0.45, 0.3);
  p.color_b = Eigen::Vector3d(0.35, 0.5, 0.65);
  return p;
}

inline OraclePrimitive side_wall() {
  OraclePrimitive p;
  p.kind = PrimitiveKind::plane;
  p.position = Eigen::Vector3d(-3.2, -0.5, 5.5);
  const double s = std::sqrt(0.5);
  p.rotation = Eigen::Vector4d(s, 0, s, 0);  // normal along world x
  p.size = Eigen::Vector3d(4.5, 2.5, 1);
  p.pattern = AlbedoPattern::gradient;
  p.color_a = Eigen::Vector3d(0.75, 0.7, 0.35);
  p.color_b = Eigen::Vector3d(0.25, 0.4, 0.55);
  return p;
}

// Static street scene: three planes, two boxes.
inline OracleSceneSpec static_scene(int frames, int size, double f) {
  OracleSceneSpec spec;
  spec.background = Eigen::Vector3d(0.07, 0.09, 0.13);
  spec.primitives.push_back(ground_plane());
  spec.primitives.push_back(back_wall());
  spec.primitives.push_back(side_wall());

  OraclePrimitive box1;
  box1.kind = PrimitiveKind::box;
  box1.position = Eigen::Vector3d(-1.2, 0.65, 4.2);
  box1.rotation = Eigen::Vector4d(0.96, 0, 0.28, 0);
  box1.size = Eigen::Vector3d(0.5, 0.55, 0.5);
  box1.pattern = AlbedoPattern::gradient;
  box1.color_a = Eigen::Vector3d(0.85, 0.3, 0.2);
  box1.color_b = Eigen::Vector3d(0.4, 0.1, 0.35);
  spec.primitives.push_back(box1);

  OraclePrimitive box2;
  box2.kind = PrimitiveKind::box;
  box2.position = Eigen::Vector3d(1.4, 0.75, 6.2);
  box2.size = Eigen::Vector3d(0.7, 0.45, 0.6);
  box2.pattern = AlbedoPattern::checker;
  box2.checker_period = 0.35;
  box2.color_a = Eigen::Vector3d(0.2, 0.7, 0.4);
  box2.color_b = Eigen::Vector3d(0.9, 0.85, 0.55);
  spec.primitives.push_back(box2);

  spec.trajectory = forward_trajectory(frames, size, f);
  return spec;
}

// Static street scene plus one laterally moving sphere.
inline OracleSceneSpec moving_sphere_scene(int frames, int size, double f,
                                           double speed = 0.12) {
  OracleSceneSpec spec = static_scene(frames, size, f);
  OraclePrimitive sphere;
  sphere.kind = PrimitiveKind::sphere;
  sphere.position = Eigen::Vector3d(-1.1, 0.35, 5.0);
  sphere.size = Eigen::Vector3d(0.45, 1, 1);
  sphere.pattern = AlbedoPattern::gradient;
  sphere.color_a = Eigen::Vector3d(0.95, 0.55, 0.15);
  sphere.color_b = Eigen::Vector3d(0.6, 0.1, 0.1);
  sphere.motion = MotionKind::linear;
  sphere.velocity = Eigen::Vector3d(speed, 0, 0);
  spec.primitives.push_back(sphere);
  return spec;
}

}  // namespace hsplat::fixtures
