// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "hsplat/dynamics/scene.hpp"

namespace hsplat {

// One planned ego pose at a continuous scene time.
struct TrajectoryStep {
  CameraPose pose;
  double t = 0;
};

// {"steps": [{fx, fy, cx, cy, width, height, world_to_cam (16 row-major), t}]}.
// The pose layout matches the bundle's poses.json, with t as a double.
std::vector<TrajectoryStep> trajectory_from_json(const nlohmann::json& j);
nlohmann::json trajectory_to_json(const std::vector<TrajectoryStep>& steps);

// Color render of every step's view at its own time.
std::vector<ImageD> render_trajectory(const HybridScene& scene,
                                      const std::vector<TrajectoryStep>& steps);

struct CollisionParams {
  double sigma = 0.5;              // kernel width, meters
  double alpha_threshold = 0.3;    // opacity gate; below this a splat is ignored
  double ground_percentile = 15.0; // lowest heights treated as road surface
  Eigen::Vector3d ego_half_extents = Eigen::Vector3d(0.9, 0.7, 2.2);  // x, y, z
};

struct CollisionReport {
  double total = 0;
  std::vector<double> per_step;
};

// Soft overlap between the scene and an ego box centered on each step's
// camera frame: sum of alpha * exp(-d^2 / (2 sigma^2)) over surviving splat
// centers, where d is the distance to the box surface (0 inside). Splats are
// taken at their deformed positions for the step's time; the ground is
// removed with a height percentile measured once on the canonical set.
CollisionReport collision_cost(const HybridScene& scene,
                               const std::vector<TrajectoryStep>& steps,
                               const CollisionParams& params = {});

struct PlanConfig {
  double smoothness_bound = 0.2;  // max |second difference| of the offsets, meters
  int sweeps = 3;
  std::vector<double> step_sizes = {0.4, 0.2, 0.1};
  CollisionParams collision;
};

struct PlanResult {
  std::vector<TrajectoryStep> steps;  // input poses shifted by the offsets
  std::vector<double> offsets;        // lateral shift per step, meters
  double initial_cost = 0;
  double final_cost = 0;
  int accepted_moves = 0;
};

// Coordinate-descent over per-step lateral offsets (along each step's camera
// x axis). Candidate moves are single-step nudges of +/- each step size plus
// uniform whole-trajectory shifts; a move is kept only when it strictly
// lowers the collision cost and respects the smoothness bound.
PlanResult optimize_trajectory(const HybridScene& scene,
                               const std::vector<TrajectoryStep>& steps,
                               const PlanConfig& cfg = {});

}  // namespace hsplat
