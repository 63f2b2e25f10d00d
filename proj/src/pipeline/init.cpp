// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/init.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

#include "hsplat/core/gaussian_math.hpp"
#include "hsplat/core/point_grid.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {
namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  return values[mid];
}

}  // namespace

InitResult init_gaussians_from_bundle(const ReferenceBundle& bundle, const InitConfig& cfg) {
  bundle.validate();
  if (cfg.pixel_stride < 1 || cfg.frame_stride < 1) {
    throw std::invalid_argument("init_gaussians_from_bundle: strides must be >= 1");
  }
  if (cfg.sh_degree < 0 || cfg.sh_degree > 3) {
    throw std::invalid_argument("init_gaussians_from_bundle: sh_degree out of range");
  }
  if (cfg.initial_alpha <= 0 || cfg.initial_alpha >= 1) {
    throw std::invalid_argument("init_gaussians_from_bundle: initial_alpha outside (0,1)");
  }
  const std::unordered_set<int> skip(cfg.skip_frames.begin(), cfg.skip_frames.end());

  InitResult out;
  const int coeffs = sh_coeff_count(cfg.sh_degree);
  const double opacity = logit(cfg.initial_alpha);
  for (int f = 0; f < bundle.frame_count(); f += cfg.frame_stride) {
    if (skip.count(f)) continue;
    const Frame& frame = bundle.frames[static_cast<size_t>(f)];
    for (int y = 0; y < frame.image.height; y += cfg.pixel_stride) {
      for (int x = 0; x < frame.image.width; x += cfg.pixel_stride) {
        if (!frame.validity.at(y, x)) continue;
        Gaussian3D g;
        g.position = Eigen::Vector3d(frame.pointmap.at(y, x, 0), frame.pointmap.at(y, x, 1),
                                     frame.pointmap.at(y, x, 2));
        g.sh_coeffs.assign(static_cast<size_t>(coeffs), Eigen::Vector3d::Zero());
        for (int c = 0; c < 3; ++c) {
          g.sh_coeffs[0][c] = (frame.image.at(y, x, c) - 0.5) / kSh0;
        }
        g.opacity_logit = opacity;
        g.feature.resize(bundle.feature_dim);
        for (int c = 0; c < bundle.feature_dim; ++c) g.feature[c] = frame.featmap.at(y, x, c);
        out.gaussians.push_back(std::move(g));
      }
    }
  }

  const size_t n = out.gaussians.size();
  if (n < 100) {
    throw std::invalid_argument("init_gaussians_from_bundle: insufficient geometry (" +
                                std::to_string(n) + " valid points, need 100)");
  }

  std::vector<Eigen::Vector3d> points(n);
  for (size_t i = 0; i < n; ++i) points[i] = out.gaussians[i].position;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : points) centroid += p;
  centroid /= static_cast<double>(n);
  std::vector<double> dists(n);
  for (size_t i = 0; i < n; ++i) dists[i] = (points[i] - centroid).norm();
  out.scene_scale = median_of(dists);
  if (!(out.scene_scale > 0)) out.scene_scale = 1.0;

  // Cell edge targets a handful of points per cell for uniform seeds.
  const double cell = 2.0 * out.scene_scale / std::cbrt(static_cast<double>(n));
  PointGrid grid(points, cell);
  std::vector<double> knn(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    knn[static_cast<size_t>(i)] = grid.mean_knn_distance(static_cast<size_t>(i), 3);
  });
  for (size_t i = 0; i < n; ++i) {
    const double d = std::max(knn[i], 1e-9);
    out.gaussians[i].log_scale.setConstant(std::log(d));
  }
  return out;
}

}  // namespace hsplat
