// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "hsplat/eval/metrics.hpp"
#include "hsplat/pipeline/losses.hpp"

using namespace hsplat;

namespace {

ImageD random_image(int h, int w, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ImageD img(h, w, c);
  for (double& v : img.data) v = dist(rng);
  return img;
}

}  // namespace

TEST_CASE("ssim of an image with itself is 1") {
  const ImageD img = random_image(13, 17, 3, 11);
  CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric and below 1 for distinct images") {
  const ImageD a = random_image(12, 12, 3, 21);
  const ImageD b = random_image(12, 12, 3, 22);
  const double ab = ssim(a, b);
  CHECK(ab == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ab < 1.0);
  CHECK(ab > -1.0);
}

TEST_CASE("ssim gradient matches finite differences") {
  ImageD a = random_image(9, 10, 3, 31);
  const ImageD b = random_image(9, 10, 3, 32);

  ImageD grad(9, 10, 3);
  ssim_with_grad(a, b, 1.0, grad);

  std::mt19937_64 rng(33);
  std::uniform_int_distribution<size_t> pick(0, a.data.size() - 1);
  const double h = 1e-6;
  for (int probe = 0; probe < 24; ++probe) {
    const size_t i = pick(rng);
    const double saved = a.data[i];
    a.data[i] = saved + h;
    const double up = ssim(a, b);
    a.data[i] = saved - h;
    const double down = ssim(a, b);
    a.data[i] = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(grad.data[i] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("ssim_with_grad scales and accumulates") {
  const ImageD a = random_image(8, 8, 3, 41);
  const ImageD b = random_image(8, 8, 3, 42);
  ImageD g1(8, 8, 3), g2(8, 8, 3);
  ssim_with_grad(a, b, 1.0, g1);
  ssim_with_grad(a, b, -2.5, g2);
  ssim_with_grad(a, b, -2.5, g2);  // accumulates on top
  for (size_t i = 0; i < g1.data.size(); ++i) {
    CHECK(g2.data[i] == doctest::Approx(-5.0 * g1.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("photometric loss decomposes into its terms") {
  const ImageD pred = random_image(10, 14, 3, 51);
  const ImageD ref = random_image(10, 14, 3, 52);
  const double l1 = 0.8, ls = 0.2;
  const PhotometricLoss loss = photometric_loss(pred, ref, l1, ls);

  double mean_abs = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) mean_abs += std::abs(pred.data[i] - ref.data[i]);
  mean_abs /= static_cast<double>(pred.data.size());

  CHECK(loss.l1 == doctest::Approx(mean_abs).epsilon(1e-12));
  CHECK(loss.ssim == doctest::Approx(ssim(pred, ref)).epsilon(1e-12));
  CHECK(std::abs(loss.total - (l1 * loss.l1 + ls * (1.0 - loss.ssim))) < 1e-9);
}

TEST_CASE("photometric loss with zero ssim weight is pure L1") {
  const ImageD pred = random_image(6, 6, 3, 61);
  const ImageD ref = random_image(6, 6, 3, 62);
  const PhotometricLoss loss = photometric_loss(pred, ref, 2.0, 0.0);
  CHECK(loss.total == doctest::Approx(2.0 * loss.l1).epsilon(1e-12));

  // L1 subgradient: sign of the difference scaled by lambda / n.
  const double unit = 2.0 / static_cast<double>(pred.data.size());
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - ref.data[i];
    const double expected = d > 0 ? unit : d < 0 ? -unit : 0.0;
    CHECK(loss.grad.data[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("photometric gradient matches finite differences") {
  ImageD pred = random_image(9, 9, 3, 71);
  const ImageD ref = random_image(9, 9, 3, 72);
  const double l1 = 1.0, ls = 0.7;
  const PhotometricLoss loss = photometric_loss(pred, ref, l1, ls);

  std::mt19937_64 rng(73);
  std::uniform_int_distribution<size_t> pick(0, pred.data.size() - 1);
  const double h = 1e-6;
  for (int probe = 0; probe < 20; ++probe) {
    const size_t i = pick(rng);
    const double saved = pred.data[i];
    pred.data[i] = saved + h;
    const double up = photometric_loss(pred, ref, l1, ls).total;
    pred.data[i] = saved - h;
    const double down = photometric_loss(pred, ref, l1, ls).total;
    pred.data[i] = saved;
    const double numeric = (up - down) / (2 * h);
    // The L1 term is non-smooth at ties; random doubles never tie here.
    CHECK(loss.grad.data[i] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("psnr closed forms") {
  ImageD a(8, 8, 3), b(8, 8, 3);
  for (double& v : a.data) v = 0.5;
  for (double& v : b.data) v = 0.6;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(std::isinf(psnr(a, a)));

  ImageD wrong(4, 4, 3);
  CHECK_THROWS_AS((void)psnr(a, wrong), std::invalid_argument);
}
