// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hsplat/dynamics/scene.hpp"
#include "fd_check.hpp"
#include "fixtures.hpp"

using namespace hsplat;

namespace {

std::vector<Gaussian3D> fat_gaussians(int count, std::uint64_t seed, double z0 = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lateral(-0.8, 0.8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Gaussian3D> out(static_cast<size_t>(count));
  for (Gaussian3D& g : out) {
    g.position = Eigen::Vector3d(lateral(rng), lateral(rng), z0 + 2.0 * unit(rng));
    g.rotation = Eigen::Vector4d(1, 0.2 * unit(rng), 0.2 * unit(rng), 0.2 * unit(rng)).normalized();
    g.log_scale.setConstant(std::log(0.5 + 0.3 * unit(rng)));
    g.opacity_logit = logit(0.4 + 0.3 * unit(rng));
    g.sh_coeffs.assign(sh_coeff_count(1), Eigen::Vector3d::Zero());
    g.sh_coeffs[0] = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    g.feature = Eigen::VectorXd::Zero(0);
  }
  return out;
}

// Field with small but nonzero offsets everywhere, so the composition and
// its pullbacks are exercised away from the identity.
DeformationField active_field(double scene_scale, double time_scale, std::uint64_t seed) {
  DeformationField field = make_deformation_field(scene_scale, time_scale, seed, 16, 2);
  MlpSpec spec = field.spec;
  spec.init = InitScheme::xavier;
  MlpParams dense = init_mlp(spec, seed + 1);
  for (auto& w : dense.weights) w *= 0.05;
  for (auto& b : dense.biases) b *= 0.05;
  field.params = std::move(dense);
  return field;
}

HybridScene small_hybrid_scene(std::uint64_t seed) {
  HybridScene scene;
  scene.static_gaussians = fat_gaussians(3, seed);
  scene.dynamic_gaussians = fat_gaussians(3, seed + 50, 5.0);
  scene.time_min = 0;
  scene.time_max = 4;
  scene.scene_scale = 2.0;
  scene.sh_degree = 1;
  scene.deform = active_field(scene.scene_scale, 4.0, seed + 100);
  return scene;
}

}  // namespace

TEST_CASE("freshly made deformation field is the identity") {
  const DeformationField field = make_deformation_field(2.0, 10.0, 5);
  field.validate();
  std::vector<Eigen::Vector3d> positions = {{0.1, -0.4, 3.0}, {2.0, 1.0, -0.5}};
  const auto deltas = deform(field, positions, 3.7);
  for (const DeformDelta& d : deltas) {
    CHECK(d.dx.norm() == 0.0);
    CHECK(d.dr.norm() == 0.0);
    CHECK(d.ds.norm() == 0.0);
  }

  const auto gaussians = fat_gaussians(4, 6);
  const auto moved = apply_deformation(gaussians, field, 1.5);
  for (size_t i = 0; i < gaussians.size(); ++i) {
    CHECK((moved[i].position - gaussians[i].position).norm() == 0.0);
    CHECK((moved[i].rotation - gaussians[i].rotation).norm() < 1e-12);
    CHECK((moved[i].log_scale - gaussians[i].log_scale).norm() == 0.0);
  }
}

TEST_CASE("deform batches agree with single evaluations") {
  const DeformationField field = active_field(1.5, 6.0, 9);
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 7; ++i) positions.emplace_back(0.3 * i, -0.2 * i, 1.0 + 0.5 * i);
  const auto batch = deform(field, positions, 2.25);
  for (size_t i = 0; i < positions.size(); ++i) {
    const auto single = deform(field, {&positions[i], 1}, 2.25);
    CHECK((batch[i].dx - single[0].dx).norm() == 0.0);
    CHECK((batch[i].dr - single[0].dr).norm() == 0.0);
    CHECK((batch[i].ds - single[0].ds).norm() == 0.0);
  }
}

TEST_CASE("deform rejects non-finite inputs") {
  const DeformationField field = make_deformation_field(1.0, 1.0, 3);
  std::vector<Eigen::Vector3d> bad = {{0, 0, std::numeric_limits<double>::quiet_NaN()}};
  CHECK_THROWS_AS((void)deform(field, bad, 0.0), std::invalid_argument);
  std::vector<Eigen::Vector3d> good = {{0, 0, 1}};
  CHECK_THROWS_AS((void)deform(field, good, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("apply_delta composes additively and renormalizes rotation") {
  Gaussian3D g;
  g.position = Eigen::Vector3d(1, 2, 3);
  g.rotation = Eigen::Vector4d(1, 0, 0, 0);
  g.log_scale = Eigen::Vector3d(0.1, 0.2, 0.3);
  g.opacity_logit = 0.7;
  g.sh_coeffs.assign(1, Eigen::Vector3d(0.5, 0.5, 0.5));

  DeformDelta d;
  d.dx = Eigen::Vector3d(0.5, -0.5, 0.25);
  d.dr = Eigen::Vector4d(0, 1, 0, 0);
  d.ds = Eigen::Vector3d(-0.1, 0.1, 0.0);

  const Gaussian3D out = apply_delta(g, d);
  CHECK((out.position - Eigen::Vector3d(1.5, 1.5, 3.25)).norm() == 0.0);
  CHECK(out.rotation.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const double s = std::sqrt(0.5);
  CHECK((out.rotation - Eigen::Vector4d(s, s, 0, 0)).norm() < 1e-12);
  CHECK((out.log_scale - Eigen::Vector3d(0.0, 0.3, 0.3)).norm() < 1e-15);
  CHECK(out.opacity_logit == 0.7);
}

TEST_CASE("deformation temporal response is continuous") {
  const DeformationField field = active_field(1.0, 8.0, 13);
  std::vector<Eigen::Vector3d> positions = {{0.2, 0.4, 2.0}};
  const double t = 3.1, eps = 1e-6;
  const auto a = deform(field, positions, t);
  const auto b = deform(field, positions, t + eps);
  CHECK((a[0].dx - b[0].dx).norm() < 1e-3);
  CHECK((a[0].dr - b[0].dr).norm() < 1e-3);
  CHECK((a[0].ds - b[0].ds).norm() < 1e-3);
}

TEST_CASE("deform_backward reproduces finite differences of a weighted sum") {
  DeformationField field = active_field(1.2, 5.0, 17);
  std::vector<Eigen::Vector3d> positions;
  for (int i = 0; i < 4; ++i) positions.emplace_back(0.4 * i - 0.6, 0.3 * i, 1.0 + 0.2 * i);
  const double t = 2.4;

  // Loss: fixed random weighting of every offset component.
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> wdist(-1.0, 1.0);
  std::vector<DeformDelta> weights(positions.size());
  for (DeformDelta& w : weights) {
    for (int c = 0; c < 3; ++c) w.dx[c] = wdist(rng);
    for (int c = 0; c < 4; ++c) w.dr[c] = wdist(rng);
    for (int c = 0; c < 3; ++c) w.ds[c] = wdist(rng);
  }
  const auto loss_of = [&](const DeformationField& f, const std::vector<Eigen::Vector3d>& pos) {
    const auto deltas = deform(f, pos, t);
    double loss = 0;
    for (size_t i = 0; i < deltas.size(); ++i) {
      loss += weights[i].dx.dot(deltas[i].dx) + weights[i].dr.dot(deltas[i].dr) +
              weights[i].ds.dot(deltas[i].ds);
    }
    return loss;
  };

  DeformCache cache;
  (void)deform_with_cache(field, positions, t, cache);
  MlpParams grads = zeros_like(field.params);
  std::vector<Eigen::Vector3d> g_positions;
  deform_backward(field, cache, weights, grads, &g_positions);

  Eigen::VectorXd flat = field.params.flatten();
  const Eigen::VectorXd flat_grads = grads.flatten();
  std::mt19937_64 pick_rng(23);
  std::uniform_int_distribution<Eigen::Index> pick(0, flat.size() - 1);
  const double h = 1e-6;
  for (int probe = 0; probe < 30; ++probe) {
    const Eigen::Index i = pick(pick_rng);
    const double saved = flat[i];
    flat[i] = saved + h;
    field.params = unflatten_mlp(field.spec, flat);
    const double up = loss_of(field, positions);
    flat[i] = saved - h;
    field.params = unflatten_mlp(field.spec, flat);
    const double down = loss_of(field, positions);
    flat[i] = saved;
    field.params = unflatten_mlp(field.spec, flat);
    const double numeric = (up - down) / (2 * h);
    CHECK(fdcheck::relative_error(flat_grads[i], numeric) < 1e-5);
  }

  for (size_t i = 0; i < positions.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      auto moved = positions;
      moved[i][c] += h;
      const double up = loss_of(field, moved);
      moved[i][c] = positions[i][c] - h;
      const double down = loss_of(field, moved);
      const double numeric = (up - down) / (2 * h);
      CHECK(fdcheck::relative_error(g_positions[i][c], numeric) < 1e-5);
    }
  }
}

TEST_CASE("static-only composition ignores time bit for bit") {
  HybridScene scene;
  scene.static_gaussians = fat_gaussians(6, 29);
  scene.time_min = 0;
  scene.time_max = 9;
  scene.sh_degree = 1;
  const GaussianSnapshot a = compose_scene_at_t(scene, 0.0);
  const GaussianSnapshot b = compose_scene_at_t(scene, 7.3);
  REQUIRE(a.count() == b.count());
  for (int i = 0; i < a.count(); ++i) {
    CHECK((a.positions[static_cast<size_t>(i)] - b.positions[static_cast<size_t>(i)]).norm() == 0.0);
    CHECK((a.cov3d[static_cast<size_t>(i)] - b.cov3d[static_cast<size_t>(i)]).norm() == 0.0);
  }
}

TEST_CASE("composition prefixes the static block unchanged at every time") {
  const HybridScene scene = small_hybrid_scene(31);
  const GaussianSnapshot a = compose_scene_at_t(scene, 0.5);
  const GaussianSnapshot b = compose_scene_at_t(scene, 3.5);
  const size_t ns = scene.static_gaussians.size();
  REQUIRE(a.count() == scene.count());
  for (size_t i = 0; i < ns; ++i) {
    CHECK((a.positions[i] - b.positions[i]).norm() == 0.0);
    CHECK((a.positions[i] - scene.static_gaussians[i].position).norm() == 0.0);
  }
  // The dynamic block moves between the two times.
  double moved = 0;
  for (size_t i = ns; i < a.positions.size(); ++i) moved += (a.positions[i] - b.positions[i]).norm();
  CHECK(moved > 0.0);
}

TEST_CASE("composition reports extrapolation") {
  const HybridScene scene = small_hybrid_scene(37);
  bool flag = true;
  (void)compose_scene_at_t(scene, 2.0, &flag);
  CHECK(!flag);
  (void)compose_scene_at_t(scene, -0.5, &flag);
  CHECK(flag);
  (void)compose_scene_at_t(scene, 4.5, &flag);
  CHECK(flag);
}

TEST_CASE("a dynamic set without a field fails validation") {
  HybridScene scene;
  scene.dynamic_gaussians = fat_gaussians(2, 41);
  CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
}

TEST_CASE("hybrid gradient chain matches finite differences through the render") {
  HybridScene scene = small_hybrid_scene(43);
  const CameraPose pose = fixtures::camera_at({0, 0, 0}, 24, 20.0);
  const ImageD weights = fdcheck::probe_weights(24, 24);
  const double t = 1.7;

  const fdcheck::HybridGrads grads = fdcheck::hybrid_grads(scene, pose, t, weights);
  const double h = 1e-5;

  SUBCASE("deformation parameters") {
    Eigen::VectorXd flat = scene.deform->params.flatten();
    const Eigen::VectorXd flat_grads = grads.deform_grads.flatten();
    std::mt19937_64 rng(47);
    std::uniform_int_distribution<Eigen::Index> pick(0, flat.size() - 1);
    int checked = 0;
    for (int probe = 0; probe < 40 && checked < 20; ++probe) {
      const Eigen::Index i = pick(rng);
      const double saved = flat[i];
      flat[i] = saved + h;
      scene.deform->params = unflatten_mlp(scene.deform->spec, flat);
      const double up = fdcheck::hybrid_loss(scene, pose, t, weights);
      flat[i] = saved - h;
      scene.deform->params = unflatten_mlp(scene.deform->spec, flat);
      const double down = fdcheck::hybrid_loss(scene, pose, t, weights);
      flat[i] = saved;
      scene.deform->params = unflatten_mlp(scene.deform->spec, flat);
      const double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) < 1e-9 && std::abs(flat_grads[i]) < 1e-9) continue;
      ++checked;
      CHECK(fdcheck::relative_error(flat_grads[i], numeric) < 1e-3);
    }
    CHECK(checked >= 8);
  }

  SUBCASE("canonical dynamic positions, identity plus network chain") {
    for (size_t i = 0; i < scene.dynamic_gaussians.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const double saved = scene.dynamic_gaussians[i].position[c];
        scene.dynamic_gaussians[i].position[c] = saved + h;
        const double up = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.dynamic_gaussians[i].position[c] = saved - h;
        const double down = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.dynamic_gaussians[i].position[c] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(fdcheck::relative_error(grads.dynamic_grads.positions[i][c], numeric) < 1e-3);
      }
    }
  }

  SUBCASE("canonical dynamic rotations through the renormalization") {
    for (size_t i = 0; i < scene.dynamic_gaussians.size(); ++i) {
      for (int c = 0; c < 4; ++c) {
        const double saved = scene.dynamic_gaussians[i].rotation[c];
        scene.dynamic_gaussians[i].rotation[c] = saved + h;
        const double up = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.dynamic_gaussians[i].rotation[c] = saved - h;
        const double down = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.dynamic_gaussians[i].rotation[c] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(fdcheck::relative_error(grads.dynamic_grads.rotations[i][c], numeric) < 1e-3);
      }
    }
  }

  SUBCASE("static parameters are untouched by the dynamic chain") {
    for (size_t i = 0; i < scene.static_gaussians.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const double saved = scene.static_gaussians[i].position[c];
        scene.static_gaussians[i].position[c] = saved + h;
        const double up = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.static_gaussians[i].position[c] = saved - h;
        const double down = fdcheck::hybrid_loss(scene, pose, t, weights);
        scene.static_gaussians[i].position[c] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(fdcheck::relative_error(grads.static_grads.positions[i][c], numeric) < 1e-3);
      }
    }
  }
}
