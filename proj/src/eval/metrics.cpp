// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {

double psnr(const ImageD& a, const ImageD& b) {
  require_same_shape(a, b, "psnr");
  if (a.data.empty()) throw std::invalid_argument("psnr: empty images");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

IouReport decomposition_iou(const HybridScene& scene, const ReferenceBundle& bundle) {
  scene.validate();
  bundle.validate();

  IouReport report;
  const size_t ns = scene.static_gaussians.size();
  RenderOptions opts;
  opts.background = scene.background;
  opts.payload = true;

  double sum = 0;
  for (int f = 0; f < bundle.frame_count(); ++f) {
    const Frame& frame = bundle.frames[static_cast<size_t>(f)];
    if (!frame.dyn_mask) continue;

    GaussianSnapshot snap = compose_scene_at_t(scene, frame.pose.timestamp_index);
    // Splat set membership, not the stored score: static 0, dynamic 1.
    for (size_t i = 0; i < snap.payload.size(); ++i) snap.payload[i] = i < ns ? 0.0 : 1.0;
    const RenderOutput out = render(snap, frame.pose, opts);

    const Image<std::uint8_t>& gt = *frame.dyn_mask;
    if (gt.width != out.scalar.width || gt.height != out.scalar.height) {
      throw std::invalid_argument("decomposition_iou: mask size disagrees with pose");
    }
    std::int64_t inter = 0, uni = 0;
    for (int y = 0; y < gt.height; ++y) {
      for (int x = 0; x < gt.width; ++x) {
        const bool pred = out.scalar.at(y, x) > 0.5;
        const bool truth = gt.at(y, x) != 0;
        inter += pred && truth;
        uni += pred || truth;
      }
    }
    const double iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    report.per_frame.push_back(iou);
    report.frame_indices.push_back(f);
    sum += iou;
  }
  if (report.per_frame.empty()) {
    throw std::invalid_argument("decomposition_iou: no frame carries a ground-truth mask");
  }
  report.mean_iou = sum / static_cast<double>(report.per_frame.size());
  return report;
}

}  // namespace hsplat
