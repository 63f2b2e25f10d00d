// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/eval/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {
namespace {

// World height; the camera convention is y-down and the bundle poses share
// the world orientation, so up is -y.
double height_of(const Eigen::Vector3d& p) { return -p.y(); }

struct StepCloud {
  std::vector<Eigen::Vector3d> points;  // world space, ground removed
  std::vector<double> alphas;
};

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const auto idx = static_cast<size_t>(
      std::llround(pct / 100.0 * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx),
                   values.end());
  return values[idx];
}

// One cloud per step: deformed positions with low-opacity splats and the road
// surface removed. The ground height cut comes from the canonical set so it
// is identical across steps.
std::vector<StepCloud> build_clouds(const HybridScene& scene,
                                    const std::vector<TrajectoryStep>& steps,
                                    const CollisionParams& params) {
  std::vector<double> heights;
  const auto consider = [&](const Gaussian3D& g) {
    return sigmoid(g.opacity_logit) > params.alpha_threshold;
  };
  for (const Gaussian3D& g : scene.static_gaussians) {
    if (consider(g)) heights.push_back(height_of(g.position));
  }
  for (const Gaussian3D& g : scene.dynamic_gaussians) {
    if (consider(g)) heights.push_back(height_of(g.position));
  }
  const double ground = percentile(std::move(heights), params.ground_percentile);

  std::vector<StepCloud> clouds(steps.size());
  for (size_t s = 0; s < steps.size(); ++s) {
    StepCloud& cloud = clouds[s];
    const auto add = [&](const Gaussian3D& g, const Eigen::Vector3d& pos) {
      if (!consider(g) || height_of(pos) < ground) return;
      cloud.points.push_back(pos);
      cloud.alphas.push_back(sigmoid(g.opacity_logit));
    };
    for (const Gaussian3D& g : scene.static_gaussians) add(g, g.position);
    if (!scene.dynamic_gaussians.empty()) {
      const std::vector<Gaussian3D> deformed =
          apply_deformation(scene.dynamic_gaussians, *scene.deform, steps[s].t);
      for (size_t i = 0; i < deformed.size(); ++i) {
        add(scene.dynamic_gaussians[i], deformed[i].position);
      }
    }
  }
  return clouds;
}

double step_cost(const StepCloud& cloud, const CameraPose& pose,
                 const CollisionParams& params) {
  const Eigen::Matrix3d R = pose.rotation();
  const Eigen::Vector3d t = pose.translation();
  const double inv_two_sigma2 = 1.0 / (2.0 * params.sigma * params.sigma);
  double cost = 0;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d pc = R * cloud.points[i] + t;
    const Eigen::Vector3d outside =
        (pc.cwiseAbs() - params.ego_half_extents).cwiseMax(0.0);
    cost += cloud.alphas[i] * std::exp(-outside.squaredNorm() * inv_two_sigma2);
  }
  return cost;
}

void validate_collision_params(const CollisionParams& p) {
  if (!(p.sigma > 0)) throw std::invalid_argument("collision: sigma must be positive");
  if (!(p.alpha_threshold >= 0 && p.alpha_threshold < 1)) {
    throw std::invalid_argument("collision: alpha_threshold must be in [0, 1)");
  }
  if (!(p.ground_percentile >= 0 && p.ground_percentile <= 100)) {
    throw std::invalid_argument("collision: ground_percentile must be in [0, 100]");
  }
  if (!(p.ego_half_extents.minCoeff() > 0)) {
    throw std::invalid_argument("collision: ego_half_extents must be positive");
  }
}

// Shift the camera center by `offset` meters along its own x axis. With
// world_to_cam = [R | t], the shifted translation is t - offset * e_x.
CameraPose shifted_pose(const CameraPose& pose, double offset) {
  CameraPose out = pose;
  out.world_to_cam(0, 3) -= offset;
  return out;
}

double max_second_difference(const std::vector<double>& offsets) {
  double worst = 0;
  for (size_t k = 1; k + 1 < offsets.size(); ++k) {
    worst = std::max(worst,
                     std::abs(offsets[k - 1] - 2.0 * offsets[k] + offsets[k + 1]));
  }
  return worst;
}

}  // namespace

std::vector<TrajectoryStep> trajectory_from_json(const nlohmann::json& j) {
  if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty()) {
    throw std::invalid_argument("trajectory: 'steps' must be a non-empty array");
  }
  std::vector<TrajectoryStep> steps;
  for (size_t i = 0; i < j["steps"].size(); ++i) {
    const std::string tag = "step " + std::to_string(i);
    try {
      const auto& sj = j["steps"][i];
      TrajectoryStep step;
      step.pose.fx = sj.at("fx").get<double>();
      step.pose.fy = sj.at("fy").get<double>();
      step.pose.cx = sj.at("cx").get<double>();
      step.pose.cy = sj.at("cy").get<double>();
      step.pose.width = sj.at("width").get<int>();
      step.pose.height = sj.at("height").get<int>();
      const auto& m = sj.at("world_to_cam");
      if (!m.is_array() || m.size() != 16) {
        throw std::invalid_argument("world_to_cam must hold 16 values");
      }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          step.pose.world_to_cam(r, c) = m[static_cast<size_t>(r) * 4 + c].get<double>();
      step.t = sj.at("t").get<double>();
      step.pose.timestamp_index = static_cast<int>(std::llround(step.t));
      step.pose.validate();
      steps.push_back(step);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("trajectory: bad " + tag + ": " + e.what());
    }
  }
  return steps;
}

nlohmann::json trajectory_to_json(const std::vector<TrajectoryStep>& steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TrajectoryStep& step : steps) {
    nlohmann::json sj;
    sj["fx"] = step.pose.fx;
    sj["fy"] = step.pose.fy;
    sj["cx"] = step.pose.cx;
    sj["cy"] = step.pose.cy;
    sj["width"] = step.pose.width;
    sj["height"] = step.pose.height;
    std::vector<double> m(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        m[static_cast<size_t>(r) * 4 + c] = step.pose.world_to_cam(r, c);
    sj["world_to_cam"] = m;
    sj["t"] = step.t;
    arr.push_back(sj);
  }
  return nlohmann::json{{"steps", arr}};
}

std::vector<ImageD> render_trajectory(const HybridScene& scene,
                                      const std::vector<TrajectoryStep>& steps) {
  scene.validate();
  RenderOptions opts;
  opts.background = scene.background;
  std::vector<ImageD> out;
  out.reserve(steps.size());
  for (const TrajectoryStep& step : steps) {
    step.pose.validate();
    const GaussianSnapshot snap = compose_scene_at_t(scene, step.t);
    out.push_back(render(snap, step.pose, opts).color);
  }
  return out;
}

CollisionReport collision_cost(const HybridScene& scene,
                               const std::vector<TrajectoryStep>& steps,
                               const CollisionParams& params) {
  scene.validate();
  validate_collision_params(params);
  const std::vector<StepCloud> clouds = build_clouds(scene, steps, params);
  CollisionReport report;
  report.per_step.reserve(steps.size());
  for (size_t s = 0; s < steps.size(); ++s) {
    const double c = step_cost(clouds[s], steps[s].pose, params);
    report.per_step.push_back(c);
    report.total += c;
  }
  return report;
}

PlanResult optimize_trajectory(const HybridScene& scene,
                               const std::vector<TrajectoryStep>& steps,
                               const PlanConfig& cfg) {
  scene.validate();
  validate_collision_params(cfg.collision);
  if (steps.empty()) throw std::invalid_argument("optimize_trajectory: no steps");
  if (!(cfg.smoothness_bound >= 0)) {
    throw std::invalid_argument("optimize_trajectory: smoothness_bound must be >= 0");
  }
  if (cfg.sweeps < 0) throw std::invalid_argument("optimize_trajectory: sweeps must be >= 0");
  for (double s : cfg.step_sizes) {
    if (!(s > 0)) throw std::invalid_argument("optimize_trajectory: step sizes must be positive");
  }

  const std::vector<StepCloud> clouds = build_clouds(scene, steps, cfg.collision);
  const size_t count = steps.size();

  std::vector<double> offsets(count, 0.0);
  std::vector<double> per_step(count);
  double total = 0;
  for (size_t s = 0; s < count; ++s) {
    per_step[s] = step_cost(clouds[s], steps[s].pose, cfg.collision);
    total += per_step[s];
  }

  PlanResult result;
  result.initial_cost = total;

  const auto cost_at = [&](size_t s, double offset) {
    return step_cost(clouds[s], shifted_pose(steps[s].pose, offset), cfg.collision);
  };

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    int accepted_this_sweep = 0;
    for (size_t k = 0; k < count; ++k) {
      for (double size : cfg.step_sizes) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> candidate = offsets;
          candidate[k] += sign * size;
          if (max_second_difference(candidate) > cfg.smoothness_bound) continue;
          const double new_cost = cost_at(k, candidate[k]);
          if (total - per_step[k] + new_cost < total) {
            total += new_cost - per_step[k];
            per_step[k] = new_cost;
            offsets = std::move(candidate);
            ++accepted_this_sweep;
          }
        }
      }
    }
    // Uniform shifts keep the second differences unchanged, so they are
    // always feasible; they move the whole trajectory sideways.
    for (double size : cfg.step_sizes) {
      for (double sign : {1.0, -1.0}) {
        double new_total = 0;
        std::vector<double> new_per_step(count);
        for (size_t s = 0; s < count; ++s) {
          new_per_step[s] = cost_at(s, offsets[s] + sign * size);
          new_total += new_per_step[s];
        }
        if (new_total < total) {
          for (size_t s = 0; s < count; ++s) offsets[s] += sign * size;
          per_step = std::move(new_per_step);
          total = new_total;
          ++accepted_this_sweep;
        }
      }
    }
    result.accepted_moves += accepted_this_sweep;
    if (accepted_this_sweep == 0) break;
  }

  result.final_cost = total;
  result.offsets = offsets;
  result.steps = steps;
  for (size_t s = 0; s < count; ++s) {
    result.steps[s].pose = shifted_pose(steps[s].pose, offsets[s]);
  }
  return result;
}

}  // namespace hsplat
