// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "hsplat/dynamics/scene.hpp"
#include "hsplat/nn/mlp.hpp"
#include "hsplat/raster/rasterizer.hpp"

// Finite-difference utilities shared by the unit and acceptance suites. The
// probe loss is a fixed weighted sum of the rendered color, which makes the
// upstream gradient the weight image itself.

namespace hsplat::fdcheck {

inline ImageD probe_weights(int height, int width) {
  ImageD w(height, width, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        w.at(y, x, c) = 0.25 + 0.5 * std::sin(0.7 * x + 1.3 * y + 0.9 * c);
      }
    }
  }
  return w;
}

inline double weighted_render_loss(const GaussianSnapshot& snap, const CameraPose& pose,
                                   const RenderOptions& opts, const ImageD& weights) {
  const RenderOutput out = render(snap, pose, opts);
  double loss = 0;
  for (size_t i = 0; i < weights.data.size(); ++i) loss += weights.data[i] * out.color.data[i];
  return loss;
}

// Loss of a composed hybrid scene at time t under the probe weights.
inline double hybrid_loss(const HybridScene& scene, const CameraPose& pose, double t,
                          const ImageD& weights) {
  RenderOptions opts;
  opts.background = scene.background;
  return weighted_render_loss(compose_scene_at_t(scene, t), pose, opts, weights);
}

struct HybridGrads {
  RenderGrads static_grads;
  RenderGrads dynamic_grads;  // canonical parameterization, deformation folded in
  MlpParams deform_grads;
};

// Analytic gradients of hybrid_loss: renders the composed scene, splits the
// rasterizer gradients at the static/dynamic boundary, maps the dynamic
// rotation gradient back through the additive-then-renormalize composition,
// and pulls the offsets back through the deformation network.
inline HybridGrads hybrid_grads(const HybridScene& scene, const CameraPose& pose, double t,
                                const ImageD& weights) {
  const size_t ns = scene.static_gaussians.size();
  const size_t nd = scene.dynamic_gaussians.size();
  const int coeffs = sh_coeff_count(scene.sh_degree);

  std::vector<Gaussian3D> combined(scene.static_gaussians);
  DeformCache cache;
  std::vector<DeformDelta> deltas;
  std::vector<double> u_norms(nd, 1.0);
  if (nd > 0) {
    std::vector<Eigen::Vector3d> dyn_pos(nd);
    for (size_t i = 0; i < nd; ++i) dyn_pos[i] = scene.dynamic_gaussians[i].position;
    deltas = deform_with_cache(*scene.deform, dyn_pos, t, cache);
    for (size_t i = 0; i < nd; ++i) {
      const double norm = (scene.dynamic_gaussians[i].rotation + deltas[i].dr).norm();
      u_norms[i] = norm > 1e-12 ? norm : 1.0;
      combined.push_back(apply_delta(scene.dynamic_gaussians[i], deltas[i]));
    }
  }

  RenderOptions opts;
  opts.background = scene.background;
  const GaussianSnapshot snap = make_snapshot(combined, scene.sh_degree);
  UpstreamGrad up;
  up.color = weights;
  const RenderGrads g = render_backward(snap, pose, opts, up);

  const auto slice = [&](size_t begin, size_t count) {
    RenderGrads out;
    const auto b = static_cast<std::ptrdiff_t>(begin);
    const auto e = static_cast<std::ptrdiff_t>(begin + count);
    out.positions.assign(g.positions.begin() + b, g.positions.begin() + e);
    out.rotations.assign(g.rotations.begin() + b, g.rotations.begin() + e);
    out.log_scales.assign(g.log_scales.begin() + b, g.log_scales.begin() + e);
    out.opacity_logits.assign(g.opacity_logits.begin() + b, g.opacity_logits.begin() + e);
    out.sh.assign(g.sh.begin() + b * coeffs, g.sh.begin() + e * coeffs);
    return out;
  };

  HybridGrads result;
  result.static_grads = slice(0, ns);
  if (nd > 0) {
    result.dynamic_grads = slice(ns, nd);
    std::vector<DeformDelta> g_deltas(nd);
    for (size_t i = 0; i < nd; ++i) {
      result.dynamic_grads.rotations[i] /= u_norms[i];
      g_deltas[i].dx = result.dynamic_grads.positions[i];
      g_deltas[i].dr = result.dynamic_grads.rotations[i];
      g_deltas[i].ds = result.dynamic_grads.log_scales[i];
    }
    result.deform_grads = zeros_like(scene.deform->params);
    std::vector<Eigen::Vector3d> g_chain;
    deform_backward(*scene.deform, cache, g_deltas, result.deform_grads, &g_chain);
    for (size_t i = 0; i < nd; ++i) result.dynamic_grads.positions[i] += g_chain[i];
  }
  return result;
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace hsplat::fdcheck
