// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/param_groups.hpp"

#include <stdexcept>

namespace hsplat {
namespace {

Eigen::VectorXd gather_positions(const std::vector<Gaussian3D>& g) {
  Eigen::VectorXd v(3 * static_cast<std::int64_t>(g.size()));
  for (size_t i = 0; i < g.size(); ++i) v.segment<3>(3 * static_cast<std::int64_t>(i)) = g[i].position;
  return v;
}

Eigen::VectorXd gather_rotations(const std::vector<Gaussian3D>& g) {
  Eigen::VectorXd v(4 * static_cast<std::int64_t>(g.size()));
  for (size_t i = 0; i < g.size(); ++i) v.segment<4>(4 * static_cast<std::int64_t>(i)) = g[i].rotation;
  return v;
}

Eigen::VectorXd gather_log_scales(const std::vector<Gaussian3D>& g) {
  Eigen::VectorXd v(3 * static_cast<std::int64_t>(g.size()));
  for (size_t i = 0; i < g.size(); ++i) v.segment<3>(3 * static_cast<std::int64_t>(i)) = g[i].log_scale;
  return v;
}

Eigen::VectorXd gather_opacities(const std::vector<Gaussian3D>& g) {
  Eigen::VectorXd v(static_cast<std::int64_t>(g.size()));
  for (size_t i = 0; i < g.size(); ++i) v[static_cast<std::int64_t>(i)] = g[i].opacity_logit;
  return v;
}

Eigen::VectorXd gather_sh(const std::vector<Gaussian3D>& g, int coeffs) {
  Eigen::VectorXd v(3 * coeffs * static_cast<std::int64_t>(g.size()));
  std::int64_t k = 0;
  for (const Gaussian3D& gi : g) {
    for (int c = 0; c < coeffs; ++c) {
      v.segment<3>(k) = gi.sh_coeffs[static_cast<size_t>(c)];
      k += 3;
    }
  }
  return v;
}

template <class Grads>
Eigen::VectorXd flatten_vec3(const Grads& grads) {
  Eigen::VectorXd v(3 * static_cast<std::int64_t>(grads.size()));
  for (size_t i = 0; i < grads.size(); ++i) v.segment<3>(3 * static_cast<std::int64_t>(i)) = grads[i];
  return v;
}

}  // namespace

GaussianAdam::GaussianAdam(std::int64_t count, int sh_coeff_count)
    : position(3 * count),
      rotation(4 * count),
      log_scale(3 * count),
      opacity(count),
      sh(3 * sh_coeff_count * count),
      sh_coeffs(sh_coeff_count) {}

void GaussianAdam::step(std::vector<Gaussian3D>& gaussians, const RenderGrads& grads,
                        const GaussianLearningRates& lr, double scene_scale) {
  const std::int64_t n = static_cast<std::int64_t>(gaussians.size());
  if (static_cast<std::int64_t>(grads.positions.size()) != n ||
      static_cast<std::int64_t>(grads.sh.size()) != n * sh_coeffs) {
    throw std::invalid_argument("GaussianAdam::step: gradient shape mismatch");
  }

  Eigen::VectorXd p = gather_positions(gaussians);
  if (adam_step(position, p, flatten_vec3(grads.positions), lr.position * scene_scale)) {
    for (std::int64_t i = 0; i < n; ++i) gaussians[static_cast<size_t>(i)].position = p.segment<3>(3 * i);
  }

  Eigen::VectorXd r = gather_rotations(gaussians);
  Eigen::VectorXd gr(4 * n);
  for (std::int64_t i = 0; i < n; ++i) gr.segment<4>(4 * i) = grads.rotations[static_cast<size_t>(i)];
  if (adam_step(rotation, r, gr, lr.rotation)) {
    for (std::int64_t i = 0; i < n; ++i) gaussians[static_cast<size_t>(i)].rotation = r.segment<4>(4 * i);
  }

  Eigen::VectorXd s = gather_log_scales(gaussians);
  if (adam_step(log_scale, s, flatten_vec3(grads.log_scales), lr.log_scale)) {
    for (std::int64_t i = 0; i < n; ++i) gaussians[static_cast<size_t>(i)].log_scale = s.segment<3>(3 * i);
  }

  Eigen::VectorXd o = gather_opacities(gaussians);
  Eigen::VectorXd go = Eigen::Map<const Eigen::VectorXd>(grads.opacity_logits.data(), n);
  if (adam_step(opacity, o, go, lr.opacity)) {
    for (std::int64_t i = 0; i < n; ++i) gaussians[static_cast<size_t>(i)].opacity_logit = o[i];
  }

  Eigen::VectorXd c = gather_sh(gaussians, sh_coeffs);
  Eigen::VectorXd gc(3 * sh_coeffs * n);
  for (std::int64_t i = 0; i < n * sh_coeffs; ++i) gc.segment<3>(3 * i) = grads.sh[static_cast<size_t>(i)];
  if (adam_step(sh, c, gc, lr.sh)) {
    std::int64_t k = 0;
    for (Gaussian3D& gi : gaussians) {
      for (int j = 0; j < sh_coeffs; ++j) {
        gi.sh_coeffs[static_cast<size_t>(j)] = c.segment<3>(k);
        k += 3;
      }
    }
  }
}

void GaussianAdam::compact(const std::vector<std::int64_t>& keep) {
  position.compact(keep, 3);
  rotation.compact(keep, 4);
  log_scale.compact(keep, 3);
  opacity.compact(keep, 1);
  sh.compact(keep, 3 * sh_coeffs);
}

std::vector<std::int64_t> prune_low_opacity(std::vector<Gaussian3D>& gaussians,
                                            double min_alpha) {
  std::vector<std::int64_t> keep;
  keep.reserve(gaussians.size());
  for (size_t i = 0; i < gaussians.size(); ++i) {
    if (sigmoid(gaussians[i].opacity_logit) >= min_alpha) {
      keep.push_back(static_cast<std::int64_t>(i));
    }
  }
  if (keep.size() != gaussians.size()) compact_by_keep(gaussians, keep);
  return keep;
}

}  // namespace hsplat
