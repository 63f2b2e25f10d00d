// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/losses.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "hsplat/parallel.hpp"

namespace hsplat {
namespace {

std::array<double, kSsimWindow> make_window() {
  std::array<double, kSsimWindow> w{};
  const int half = kSsimWindow / 2;
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    w[static_cast<size_t>(i)] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
    sum += w[static_cast<size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable same-size convolution with zero padding. The kernel is symmetric,
// so this operator is its own adjoint.
void conv_same(const std::vector<double>& in, int h, int w, std::vector<double>& tmp,
               std::vector<double>& out) {
  static const std::array<double, kSsimWindow> kernel = make_window();
  const int half = kSsimWindow / 2;
  tmp.resize(in.size());
  out.resize(in.size());
  parallel_for(h, [&](std::int64_t y) {
    const double* row = in.data() + y * w;
    double* trow = tmp.data() + y * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      const int k0 = x - half < 0 ? half - x : 0;
      const int k1 = x + half >= w ? half + (w - 1 - x) : kSsimWindow - 1;
      for (int k = k0; k <= k1; ++k) acc += kernel[static_cast<size_t>(k)] * row[x + k - half];
      trow[x] = acc;
    }
  });
  parallel_for(h, [&](std::int64_t y) {
    double* orow = out.data() + y * w;
    const int j0 = static_cast<int>(y) - half < 0 ? half - static_cast<int>(y) : 0;
    const int j1 = static_cast<int>(y) + half >= h ? half + (h - 1 - static_cast<int>(y))
                                                   : kSsimWindow - 1;
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int j = j0; j <= j1; ++j) {
        acc += kernel[static_cast<size_t>(j)] * tmp[(y + j - half) * w + x];
      }
      orow[x] = acc;
    }
  });
}

struct ChannelPlanes {
  std::vector<double> x, y;
};

void extract_channel(const ImageD& img, int c, std::vector<double>& plane) {
  const size_t n = static_cast<size_t>(img.height) * img.width;
  plane.resize(n);
  for (size_t i = 0; i < n; ++i) plane[i] = img.data[i * img.channels + c];
}

double ssim_impl(const ImageD& a, const ImageD& b, double scale, ImageD* grad_a) {
  require_same_shape(a, b, "ssim");
  const int h = a.height, w = a.width;
  const size_t n = static_cast<size_t>(h) * w;
  if (n == 0) return 1.0;
  const double c1 = kSsimK1 * kSsimK1;
  const double c2 = kSsimK2 * kSsimK2;

  std::vector<double> x, y, mx, my, xx, yy, xy, tmp, t2;
  std::vector<double> g_mx, g_xx, g_xy, cg1, cg2, cg3;
  double total = 0;
  for (int c = 0; c < a.channels; ++c) {
    extract_channel(a, c, x);
    extract_channel(b, c, y);
    conv_same(x, h, w, tmp, mx);
    conv_same(y, h, w, tmp, my);
    t2.resize(n);
    for (size_t i = 0; i < n; ++i) t2[i] = x[i] * x[i];
    conv_same(t2, h, w, tmp, xx);
    for (size_t i = 0; i < n; ++i) t2[i] = y[i] * y[i];
    conv_same(t2, h, w, tmp, yy);
    for (size_t i = 0; i < n; ++i) t2[i] = x[i] * y[i];
    conv_same(t2, h, w, tmp, xy);

    if (grad_a) {
      g_mx.assign(n, 0);
      g_xx.assign(n, 0);
      g_xy.assign(n, 0);
    }
    const double q = scale / (static_cast<double>(n) * a.channels);
    double chan_sum = 0;
    for (size_t i = 0; i < n; ++i) {
      const double vx = xx[i] - mx[i] * mx[i];
      const double vy = yy[i] - my[i] * my[i];
      const double cv = xy[i] - mx[i] * my[i];
      const double a1 = 2 * mx[i] * my[i] + c1;
      const double a2 = 2 * cv + c2;
      const double b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
      const double b2 = vx + vy + c2;
      const double s = (a1 * a2) / (b1 * b2);
      chan_sum += s;
      if (grad_a) {
        const double inv_d = 1.0 / (b1 * b2);
        const double ds_da1 = a2 * inv_d;
        const double ds_da2 = a1 * inv_d;
        const double ds_db1 = -s / b1;
        const double ds_db2 = -s / b2;
        g_mx[i] = q * 2 * (my[i] * ds_da1 + mx[i] * ds_db1 - mx[i] * ds_db2 - my[i] * ds_da2);
        g_xx[i] = q * ds_db2;
        g_xy[i] = q * 2 * ds_da2;
      }
    }
    total += chan_sum / static_cast<double>(n);

    if (grad_a) {
      conv_same(g_mx, h, w, tmp, cg1);
      conv_same(g_xx, h, w, tmp, cg2);
      conv_same(g_xy, h, w, tmp, cg3);
      for (size_t i = 0; i < n; ++i) {
        grad_a->data[i * a.channels + c] += cg1[i] + cg2[i] * 2 * x[i] + cg3[i] * y[i];
      }
    }
  }
  return total / a.channels;
}

}  // namespace

double ssim(const ImageD& a, const ImageD& b) { return ssim_impl(a, b, 0.0, nullptr); }

double ssim_with_grad(const ImageD& a, const ImageD& b, double scale, ImageD& grad_a) {
  require_same_shape(a, grad_a, "ssim_with_grad");
  return ssim_impl(a, b, scale, &grad_a);
}

PhotometricLoss photometric_loss(const ImageD& pred, const ImageD& ref, double lambda_l1,
                                 double lambda_ssim) {
  require_same_shape(pred, ref, "photometric_loss");
  PhotometricLoss out;
  out.grad = ImageD(pred.height, pred.width, pred.channels, 0.0);
  const size_t n = pred.data.size();
  if (n > 0 && lambda_l1 != 0) {
    double sum = 0;
    const double q = lambda_l1 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      const double d = pred.data[i] - ref.data[i];
      sum += std::abs(d);
      out.grad.data[i] = d > 0 ? q : (d < 0 ? -q : 0.0);
    }
    out.l1 = sum / static_cast<double>(n);
  } else if (n > 0) {
    double sum = 0;
    for (size_t i = 0; i < n; ++i) sum += std::abs(pred.data[i] - ref.data[i]);
    out.l1 = sum / static_cast<double>(n);
  }
  // d(1 - ssim)/dpred = -dSSIM/dpred.
  out.ssim = ssim_impl(pred, ref, -lambda_ssim, lambda_ssim != 0 ? &out.grad : nullptr);
  out.total = lambda_l1 * out.l1 + lambda_ssim * (1.0 - out.ssim);
  return out;
}

}  // namespace hsplat
