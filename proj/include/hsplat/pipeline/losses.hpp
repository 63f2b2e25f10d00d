// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hsplat/core/image.hpp"

namespace hsplat {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Structural similarity with an 11x11 Gaussian window, per-channel averaged.
// Local statistics use zero padding at the border; the backward pass uses the
// same operator, which is self-adjoint, so gradients match the forward
// definition exactly.
double ssim(const ImageD& a, const ImageD& b);

// Returns ssim(a, b) and accumulates scale * dSSIM/da into grad_a, which must
// already have a's shape.
double ssim_with_grad(const ImageD& a, const ImageD& b, double scale, ImageD& grad_a);

struct PhotometricLoss {
  double total = 0;
  double l1 = 0;    // mean absolute difference
  double ssim = 0;  // similarity value, not the loss term
  ImageD grad;      // d total / d pred
};

// total = lambda_l1 * mean|pred - ref| + lambda_ssim * (1 - ssim(pred, ref)).
PhotometricLoss photometric_loss(const ImageD& pred, const ImageD& ref,
                                 double lambda_l1, double lambda_ssim);

}  // namespace hsplat
