// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hsplat/decomp/decomposition.hpp"
#include "hsplat/pipeline/losses.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {

PrepassReport optimize_static_prepass(std::vector<Gaussian3D>& gaussians,
                                      const ReferenceBundle& bundle, double scene_scale,
                                      const PrepassConfig& cfg) {
  bundle.validate();
  if (bundle.frame_count() < 2 && cfg.frames.empty()) {
    throw std::invalid_argument("optimize_static_prepass: need at least 2 frames");
  }
  if (gaussians.empty()) {
    throw std::invalid_argument("optimize_static_prepass: empty Gaussian set");
  }
  std::vector<int> frames = cfg.frames;
  if (frames.empty()) {
    frames.resize(static_cast<size_t>(bundle.frame_count()));
    std::iota(frames.begin(), frames.end(), 0);
  }
  for (int f : frames) {
    if (f < 0 || f >= bundle.frame_count()) {
      throw std::invalid_argument("optimize_static_prepass: frame index out of range");
    }
  }

  PrepassReport report;
  report.start_count = static_cast<int>(gaussians.size());
  const int coeffs = sh_coeff_count(cfg.sh_degree);
  GaussianAdam adam(static_cast<std::int64_t>(gaussians.size()), coeffs);
  RenderOptions options;
  options.background = bundle.background;
  options.sh_degree = cfg.sh_degree;

  const int cycle = static_cast<int>(frames.size());
  for (int iter = 0; iter < cfg.iters; ++iter) {
    if (cfg.prune_interval > 0 && iter > 0 && iter % cfg.prune_interval == 0) {
      const size_t before = gaussians.size();
      const std::vector<std::int64_t> keep = prune_low_opacity(gaussians, cfg.prune_min_alpha);
      if (keep.size() != before) adam.compact(keep);
    }
    const Frame& frame = bundle.frames[static_cast<size_t>(frames[static_cast<size_t>(iter % cycle)])];
    GaussianSnapshot snapshot = make_snapshot(gaussians, cfg.sh_degree);
    const RenderOutput render_out = render(snapshot, frame.pose, options);
    PhotometricLoss loss =
        photometric_loss(render_out.color, frame.image, cfg.lambda_l1, cfg.lambda_ssim);
    if (!std::isfinite(loss.total)) {
      throw std::runtime_error("optimize_static_prepass: loss diverged at iteration " +
                               std::to_string(iter));
    }
    report.loss_history.push_back(loss.total);
    UpstreamGrad upstream;
    upstream.color = std::move(loss.grad);
    const RenderGrads grads = render_backward(snapshot, frame.pose, options, upstream);
    adam.step(gaussians, grads, cfg.lr, scene_scale);
  }

  report.end_count = static_cast<int>(gaussians.size());
  const int tail = std::min<int>(cycle, static_cast<int>(report.loss_history.size()));
  if (tail > 0) {
    double sum = 0;
    for (int i = 0; i < tail; ++i) {
      sum += report.loss_history[report.loss_history.size() - 1 - static_cast<size_t>(i)];
    }
    report.final_loss_avg = sum / tail;
  }
  return report;
}

}  // namespace hsplat
