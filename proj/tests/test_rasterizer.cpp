// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hsplat/core/gaussian_math.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/raster/rasterizer.hpp"

using namespace hsplat;

namespace {

CameraPose test_pose(int size, double f) {
  CameraPose pose;
  pose.fx = pose.fy = f;
  pose.cx = pose.cy = size / 2.0;
  pose.width = pose.height = size;
  return pose;
}

Gaussian3D make_gaussian(const Eigen::Vector3d& pos, double scale, double opacity,
                         const Eigen::Vector3d& rgb) {
  Gaussian3D g;
  g.position = pos;
  g.log_scale = Eigen::Vector3d::Constant(std::log(scale));
  g.opacity_logit = logit(opacity);
  // Degree 0: color = 0.5 + Y00 * c0, so c0 = (rgb - 0.5) / Y00.
  g.sh_coeffs = {(rgb.array() - 0.5).matrix() / 0.28209479177387814};
  return g;
}

// Scenes for the oracle-equivalence property. Densities are kept moderate so
// per-pixel transmittance stays above the early-termination threshold almost
// everywhere; the remaining tail is what the tolerance absorbs.
std::vector<Gaussian3D> random_scene(std::mt19937& rng, int max_count) {
  std::uniform_int_distribution<int> nd(1, max_count);
  std::uniform_real_distribution<double> xy(-1.2, 1.2), zd(1.0, 5.0);
  std::uniform_real_distribution<double> sc(0.01, 0.05), lg(-3.0, 0.0);
  std::uniform_real_distribution<double> cf(-0.5, 0.5), u01(0.0, 1.0);
  std::uniform_real_distribution<double> qd(-1.0, 1.0);
  const int n = nd(rng);
  std::vector<Gaussian3D> scene;
  scene.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Gaussian3D g;
    const double z = zd(rng);
    g.position = Eigen::Vector3d(xy(rng) * z * 0.5, xy(rng) * z * 0.5, z);
    g.rotation = Eigen::Vector4d(qd(rng), qd(rng), qd(rng), qd(rng));
    if (g.rotation.norm() < 0.1) g.rotation = Eigen::Vector4d(1, 0, 0, 0);
    g.log_scale = Eigen::Vector3d(std::log(sc(rng)), std::log(sc(rng)), std::log(sc(rng)));
    g.opacity_logit = lg(rng);
    g.sh_coeffs.assign(static_cast<size_t>(sh_coeff_count(2)), Eigen::Vector3d::Zero());
    g.sh_coeffs[0] = Eigen::Vector3d(u01(rng), u01(rng), u01(rng));
    for (size_t k = 1; k < g.sh_coeffs.size(); ++k) {
      g.sh_coeffs[k] = 0.3 * Eigen::Vector3d(cf(rng), cf(rng), cf(rng));
    }
    g.dynamic_score = u01(rng);
    scene.push_back(g);
  }
  return scene;
}

double max_abs_diff(const ImageD& a, const ImageD& b) {
  REQUIRE(a.data.size() == b.data.size());
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("empty scene renders the background") {
  const CameraPose pose = test_pose(32, 30.0);
  RenderOptions opts;
  opts.background = Eigen::Vector3d(0.2, 0.4, 0.6);
  opts.payload = true;
  const GaussianSnapshot snap = make_snapshot({}, 0);
  const RenderOutput out = render(snap, pose, opts);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK(out.color.at(y, x, 0) == 0.2);
      CHECK(out.color.at(y, x, 1) == 0.4);
      CHECK(out.color.at(y, x, 2) == 0.6);
      CHECK(out.alpha.at(y, x) == 0.0);
      CHECK(out.depth.at(y, x) == 0.0);
      CHECK(out.scalar.at(y, x) == 0.0);
      CHECK(out.contrib_count.at(y, x) == 0);
    }
  }
}

TEST_CASE("single on-axis splat matches the closed form") {
  const CameraPose pose = test_pose(64, 60.0);
  const double opacity = 0.8, z = 2.0, scale = 0.2;
  const Eigen::Vector3d rgb(0.9, 0.6, 0.3);
  std::vector<Gaussian3D> scene{make_gaussian(Eigen::Vector3d(0, 0, z), scale, opacity, rgb)};
  RenderOptions opts;
  opts.background = Eigen::Vector3d(0.1, 0.1, 0.1);
  const RenderOutput out = render(make_snapshot(scene, 0), pose, opts);

  // Footprint is isotropic: Sigma2d = (f*s/z)^2 + blur on the diagonal.
  const double var = std::pow(pose.fx * scale / z, 2) + kScreenBlur;
  const int cx = 32, cy = 32;  // optical axis lands exactly on this pixel
  for (auto [px, py] : {std::pair{cx, cy}, {cx + 3, cy}, {cx, cy - 5}, {cx + 4, cy + 6}}) {
    const double d2 = std::pow(px - 32.0, 2) + std::pow(py - 32.0, 2);
    const double a = opacity * std::exp(-0.5 * d2 / var);
    if (a < 1.0 / 255.0) continue;
    for (int c = 0; c < 3; ++c) {
      const double expect = a * rgb[c] + (1 - a) * opts.background[c];
      CHECK(out.color.at(py, px, c) == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(out.alpha.at(py, px) == doctest::Approx(a).epsilon(1e-9));
    CHECK(out.depth.at(py, px) == doctest::Approx(a * z).epsilon(1e-9));
    CHECK(out.contrib_count.at(py, px) == 1);
  }
  // Alpha peaks at the center and stays in range.
  for (size_t i = 0; i < out.alpha.data.size(); ++i) {
    CHECK(out.alpha.data[i] >= 0.0);
    CHECK(out.alpha.data[i] <= out.alpha.at(cy, cx));
  }
}

TEST_CASE("two overlapping splats composite front to back") {
  const CameraPose pose = test_pose(64, 60.0);
  const Eigen::Vector3d red(1, 0, 0), blue(0, 0, 1);
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 1), 0.15, 0.6, red),
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.3, 0.5, blue),
  };
  RenderOptions opts;  // black background
  const RenderOutput out = render(make_snapshot(scene, 0), pose, opts);
  // At the exact center both weights are the plain opacities.
  const double a1 = 0.6, a2 = 0.5;
  // SH degree-0 colors reproduce the requested RGB exactly only inside [0,1] after
  // the clamp; red/blue land on the clamp boundary at 0, which is exact.
  CHECK(out.color.at(32, 32, 0) == doctest::Approx(a1 * 1.0).epsilon(1e-9));
  CHECK(out.color.at(32, 32, 2) == doctest::Approx(a2 * (1 - a1) * 1.0).epsilon(1e-9));
  CHECK(out.alpha.at(32, 32) == doctest::Approx(a1 + a2 * (1 - a1)).epsilon(1e-9));
  CHECK(out.depth.at(32, 32) ==
        doctest::Approx(a1 * 1.0 + a2 * (1 - a1) * 2.0).epsilon(1e-9));
  CHECK(out.contrib_count.at(32, 32) == 2);
}

TEST_CASE("equal depths fall back to index order") {
  const CameraPose pose = test_pose(64, 60.0);
  const Eigen::Vector3d red(1, 0, 0), blue(0, 0, 1);
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.2, 0.5, red),
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.2, 0.5, blue),
  };
  RenderOptions opts;
  const RenderOutput out = render(make_snapshot(scene, 0), pose, opts);
  // Index 0 composites first.
  CHECK(out.color.at(32, 32, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(out.color.at(32, 32, 2) == doctest::Approx(0.25).epsilon(1e-9));

  std::swap(scene[0], scene[1]);
  const RenderOutput swapped = render(make_snapshot(scene, 0), pose, opts);
  CHECK(swapped.color.at(32, 32, 2) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(swapped.color.at(32, 32, 0) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("brute force agrees with the tiled renderer on random scenes") {
  std::mt19937 rng(2026);
  RenderOptions opts;
  opts.background = Eigen::Vector3d(0.3, 0.3, 0.3);
  opts.payload = true;
  const CameraPose pose = test_pose(64, 60.0);
  for (int trial = 0; trial < 8; ++trial) {
    const std::vector<Gaussian3D> scene = random_scene(rng, 500);
    const GaussianSnapshot snap = make_snapshot(scene, 2);
    const RenderOutput a = render(snap, pose, opts);
    const RenderOutput b = brute_force_render(snap, pose, opts);
    CHECK(max_abs_diff(a.color, b.color) <= 1e-5);
    CHECK(max_abs_diff(a.alpha, b.alpha) <= 1e-5);
    CHECK(max_abs_diff(a.depth, b.depth) <= 1e-4);  // depth carries meters, not [0,1]
    CHECK(max_abs_diff(a.scalar, b.scalar) <= 1e-5);
  }
}

TEST_CASE("single splat renders bitwise equal in both renderers") {
  const CameraPose pose = test_pose(64, 60.0);
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0.1, -0.2, 2), 0.2, 0.7, Eigen::Vector3d(0.8, 0.5, 0.2))};
  RenderOptions opts;
  opts.background = Eigen::Vector3d(0.05, 0.05, 0.05);
  const GaussianSnapshot snap = make_snapshot(scene, 0);
  const RenderOutput a = render(snap, pose, opts);
  const RenderOutput b = brute_force_render(snap, pose, opts);
  CHECK(max_abs_diff(a.color, b.color) == 0.0);
  CHECK(max_abs_diff(a.alpha, b.alpha) == 0.0);
  CHECK(max_abs_diff(a.depth, b.depth) == 0.0);
}

TEST_CASE("renders are bit-identical across worker counts") {
  std::mt19937 rng(99);
  const std::vector<Gaussian3D> scene = random_scene(rng, 300);
  const GaussianSnapshot snap = make_snapshot(scene, 2);
  const CameraPose pose = test_pose(64, 60.0);
  RenderOptions opts;
  opts.payload = true;

  set_threads(1);
  const RenderOutput a = render(snap, pose, opts);
  const RenderGrads ga = [&] {
    UpstreamGrad up;
    up.color = ImageD(pose.height, pose.width, 3);
    std::fill(up.color.data.begin(), up.color.data.end(), 1.0);
    return render_backward(snap, pose, opts, up);
  }();
  set_threads(4);
  const RenderOutput b = render(snap, pose, opts);
  const RenderGrads gb = [&] {
    UpstreamGrad up;
    up.color = ImageD(pose.height, pose.width, 3);
    std::fill(up.color.data.begin(), up.color.data.end(), 1.0);
    return render_backward(snap, pose, opts, up);
  }();
  set_threads(0);

  CHECK(max_abs_diff(a.color, b.color) == 0.0);
  CHECK(max_abs_diff(a.alpha, b.alpha) == 0.0);
  for (size_t i = 0; i < ga.positions.size(); ++i) {
    CHECK((ga.positions[i] - gb.positions[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ga.rotations[i] - gb.rotations[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ga.log_scales[i] - gb.log_scales[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ga.opacity_logits[i] == gb.opacity_logits[i]);
  }
}

TEST_CASE("payload of all ones reproduces the alpha image exactly") {
  std::mt19937 rng(7);
  std::vector<Gaussian3D> scene = random_scene(rng, 200);
  for (Gaussian3D& g : scene) g.dynamic_score = 1.0;
  const GaussianSnapshot snap = make_snapshot(scene, 2);
  const CameraPose pose = test_pose(64, 60.0);
  RenderOptions opts;
  opts.payload = true;
  const RenderOutput out = render(snap, pose, opts);
  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) {
      CHECK(out.scalar.at(y, x) == out.alpha.at(y, x));
    }
  }
}

TEST_CASE("accumulated alpha is monotone in any single opacity") {
  const CameraPose pose = test_pose(32, 30.0);
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 1.5), 0.3, 0.4, Eigen::Vector3d(0.9, 0.2, 0.1)),
      make_gaussian(Eigen::Vector3d(0.1, 0.05, 2.5), 0.4, 0.5, Eigen::Vector3d(0.2, 0.9, 0.4)),
      make_gaussian(Eigen::Vector3d(-0.1, 0.0, 3.5), 0.5, 0.6, Eigen::Vector3d(0.1, 0.3, 0.8)),
  };
  RenderOptions opts;
  const ImageD base = render(make_snapshot(scene, 0), pose, opts).alpha;
  for (size_t k = 0; k < scene.size(); ++k) {
    std::vector<Gaussian3D> bumped = scene;
    bumped[k].opacity_logit += 0.25;
    const ImageD up = render(make_snapshot(bumped, 0), pose, opts).alpha;
    for (size_t i = 0; i < base.data.size(); ++i) {
      CHECK(up.data[i] >= base.data[i] - 1e-12);
    }
  }
}

TEST_CASE("degenerate covariances are skipped and counted") {
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.2, 0.7, Eigen::Vector3d(0.9, 0.1, 0.1))};
  scene.push_back(scene[0]);
  scene[1].log_scale = Eigen::Vector3d::Constant(750.0);  // exp overflows to inf
  const CameraPose pose = test_pose(32, 30.0);
  const RenderOutput out = render(make_snapshot(scene, 0), pose, RenderOptions{});
  CHECK(out.skipped_gaussians == 1);
  CHECK(out.color.at(16, 16, 0) > 0.5);  // the healthy splat still lands
}

TEST_CASE("zero upstream gradient yields exactly zero parameter gradients") {
  std::mt19937 rng(5);
  const std::vector<Gaussian3D> scene = random_scene(rng, 50);
  const GaussianSnapshot snap = make_snapshot(scene, 2);
  const CameraPose pose = test_pose(32, 30.0);
  RenderOptions opts;
  opts.payload = true;
  const RenderGrads g = render_backward(snap, pose, opts, UpstreamGrad{});
  for (int i = 0; i < snap.count(); ++i) {
    CHECK(g.positions[static_cast<size_t>(i)].norm() == 0.0);
    CHECK(g.rotations[static_cast<size_t>(i)].norm() == 0.0);
    CHECK(g.log_scales[static_cast<size_t>(i)].norm() == 0.0);
    CHECK(g.opacity_logits[static_cast<size_t>(i)] == 0.0);
    CHECK(g.payload[static_cast<size_t>(i)] == 0.0);
  }
}

namespace {

// Boundary-free gradient-check scene: footprints cover the whole image so no
// 3-sigma ring or contribution cutoff lies inside it, keeping the loss smooth.
std::vector<Gaussian3D> smooth_scene(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> xy(-0.4, 0.4), zd(2.0, 4.0);
  std::uniform_real_distribution<double> sc(0.8, 1.4), lg(-1.5, 0.0);
  std::uniform_real_distribution<double> c0(0.6, 1.4), cf(-0.15, 0.15);
  std::uniform_real_distribution<double> qd(-1.0, 1.0), u01(0.2, 0.8);
  std::vector<Gaussian3D> scene;
  for (int i = 0; i < n; ++i) {
    Gaussian3D g;
    g.position = Eigen::Vector3d(xy(rng), xy(rng), zd(rng));
    g.rotation = Eigen::Vector4d(1.0 + 0.3 * qd(rng), 0.3 * qd(rng), 0.3 * qd(rng), 0.3 * qd(rng));
    const double base = std::log(sc(rng));
    g.log_scale = Eigen::Vector3d(base, base + 0.1 * qd(rng), base + 0.1 * qd(rng));
    g.opacity_logit = lg(rng);
    g.sh_coeffs.assign(static_cast<size_t>(sh_coeff_count(1)), Eigen::Vector3d::Zero());
    g.sh_coeffs[0] = Eigen::Vector3d(c0(rng), c0(rng), c0(rng));
    for (size_t k = 1; k < g.sh_coeffs.size(); ++k) {
      g.sh_coeffs[k] = Eigen::Vector3d(cf(rng), cf(rng), cf(rng));
    }
    g.dynamic_score = u01(rng);
    scene.push_back(g);
  }
  return scene;
}

struct LossWeights {
  ImageD color, alpha, depth, scalar;
};

LossWeights random_weights(const CameraPose& pose, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  LossWeights w;
  w.color = ImageD(pose.height, pose.width, 3);
  w.alpha = ImageD(pose.height, pose.width, 1);
  w.depth = ImageD(pose.height, pose.width, 1);
  w.scalar = ImageD(pose.height, pose.width, 1);
  for (double& v : w.color.data) v = d(rng);
  for (double& v : w.alpha.data) v = d(rng);
  for (double& v : w.depth.data) v = d(rng);
  for (double& v : w.scalar.data) v = d(rng);
  return w;
}

double weighted_loss(const GaussianSnapshot& snap, const CameraPose& pose,
                     const RenderOptions& opts, const LossWeights& w) {
  const RenderOutput out = render(snap, pose, opts);
  double loss = 0;
  for (size_t i = 0; i < out.color.data.size(); ++i) loss += w.color.data[i] * out.color.data[i];
  for (size_t i = 0; i < out.alpha.data.size(); ++i) loss += w.alpha.data[i] * out.alpha.data[i];
  for (size_t i = 0; i < out.depth.data.size(); ++i) loss += w.depth.data[i] * out.depth.data[i];
  for (size_t i = 0; i < out.scalar.data.size(); ++i)
    loss += w.scalar.data[i] * out.scalar.data[i];
  return loss;
}

void check_grad(double analytic, double fd) {
  const double tol = 1e-3 * std::max(1.0, std::max(std::abs(analytic), std::abs(fd)));
  CHECK(std::abs(analytic - fd) <= tol);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  const CameraPose pose = test_pose(32, 30.0);
  RenderOptions opts;
  opts.background = Eigen::Vector3d(0.15, 0.25, 0.35);
  opts.payload = true;
  std::vector<Gaussian3D> scene = smooth_scene(6, 41);
  GaussianSnapshot snap = make_snapshot(scene, 1);
  const LossWeights w = random_weights(pose, 77);

  UpstreamGrad up;
  up.color = w.color;
  up.alpha = w.alpha;
  up.depth = w.depth;
  up.scalar = w.scalar;
  const RenderGrads g = render_backward(snap, pose, opts, up);

  const double h = 1e-4;
  const int coeffs = sh_coeff_count(1);
  for (size_t i = 0; i < scene.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      auto probe = [&](double delta) {
        std::vector<Gaussian3D> s = scene;
        s[i].position[k] += delta;
        return weighted_loss(make_snapshot(s, 1), pose, opts, w);
      };
      check_grad(g.positions[i][k], (probe(h) - probe(-h)) / (2 * h));
    }
    for (int k = 0; k < 4; ++k) {
      auto probe = [&](double delta) {
        std::vector<Gaussian3D> s = scene;
        s[i].rotation[k] += delta;
        return weighted_loss(make_snapshot(s, 1), pose, opts, w);
      };
      check_grad(g.rotations[i][k], (probe(h) - probe(-h)) / (2 * h));
    }
    for (int k = 0; k < 3; ++k) {
      auto probe = [&](double delta) {
        std::vector<Gaussian3D> s = scene;
        s[i].log_scale[k] += delta;
        return weighted_loss(make_snapshot(s, 1), pose, opts, w);
      };
      check_grad(g.log_scales[i][k], (probe(h) - probe(-h)) / (2 * h));
    }
    {
      auto probe = [&](double delta) {
        std::vector<Gaussian3D> s = scene;
        s[i].opacity_logit += delta;
        return weighted_loss(make_snapshot(s, 1), pose, opts, w);
      };
      check_grad(g.opacity_logits[i], (probe(h) - probe(-h)) / (2 * h));
    }
    {
      auto probe = [&](double delta) {
        std::vector<Gaussian3D> s = scene;
        s[i].dynamic_score += delta;
        return weighted_loss(make_snapshot(s, 1), pose, opts, w);
      };
      check_grad(g.payload[i], (probe(h) - probe(-h)) / (2 * h));
    }
    for (int k = 0; k < coeffs; ++k) {
      for (int c = 0; c < 3; ++c) {
        auto probe = [&](double delta) {
          std::vector<Gaussian3D> s = scene;
          s[i].sh_coeffs[static_cast<size_t>(k)][c] += delta;
          return weighted_loss(make_snapshot(s, 1), pose, opts, w);
        };
        check_grad(g.sh[i * static_cast<size_t>(coeffs) + static_cast<size_t>(k)][c],
                   (probe(h) - probe(-h)) / (2 * h));
      }
    }
  }
}

TEST_CASE("raising a red splat's opacity raises the red-channel sum") {
  const CameraPose pose = test_pose(32, 30.0);
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.4, 0.5, Eigen::Vector3d(1.0, 0.0, 0.0))};
  RenderOptions opts;  // black background
  UpstreamGrad up;
  up.color = ImageD(pose.height, pose.width, 3);
  for (int y = 0; y < pose.height; ++y)
    for (int x = 0; x < pose.width; ++x) up.color.at(y, x, 0) = 1.0;
  const RenderGrads g = render_backward(make_snapshot(scene, 0), pose, opts, up);
  CHECK(g.opacity_logits[0] > 0.0);
}

TEST_CASE("backward rejects mismatched upstream shapes") {
  std::vector<Gaussian3D> scene{
      make_gaussian(Eigen::Vector3d(0, 0, 2), 0.2, 0.5, Eigen::Vector3d(0.5, 0.5, 0.5))};
  const GaussianSnapshot snap = make_snapshot(scene, 0);
  const CameraPose pose = test_pose(32, 30.0);
  UpstreamGrad up;
  up.color = ImageD(16, 16, 3);  // wrong size
  CHECK_THROWS_AS(render_backward(snap, pose, RenderOptions{}, up), std::invalid_argument);

  UpstreamGrad up2;
  up2.scalar = ImageD(32, 32, 1);  // payload disabled in options
  CHECK_THROWS_AS(render_backward(snap, pose, RenderOptions{}, up2), std::invalid_argument);
}
