// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "hsplat/nn/adam.hpp"
#include "hsplat/nn/encoding.hpp"
#include "hsplat/nn/mlp.hpp"

using namespace hsplat;

TEST_CASE("positional encoding hand values") {
  Eigen::VectorXd x(1);
  x << 0.0;
  const Eigen::VectorXd e0 = positional_encoding(x, 2);
  REQUIRE(e0.size() == 5);
  CHECK(e0[0] == 0.0);
  CHECK(e0[1] == 0.0);  // sin(0)
  CHECK(e0[2] == 1.0);  // cos(0)
  CHECK(e0[3] == 0.0);
  CHECK(e0[4] == 1.0);

  x << 0.5;
  const Eigen::VectorXd e1 = positional_encoding(x, 1);
  REQUIRE(e1.size() == 3);
  CHECK(e1[0] == 0.5);
  CHECK(e1[1] == doctest::Approx(1.0).epsilon(1e-12));           // sin(pi/2)
  CHECK(std::abs(e1[2]) < 1e-12);                                // cos(pi/2)

  // L = 0 is the identity passthrough.
  Eigen::VectorXd x3(3);
  x3 << 0.1, -0.7, 0.4;
  CHECK((positional_encoding(x3, 0) - x3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("positional encoding backward matches finite differences") {
  Eigen::VectorXd x(3);
  x << 0.3, -0.2, 0.8;
  const int L = 4;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd g(positional_encoding_dim(3, L));
  for (int i = 0; i < g.size(); ++i) g[i] = d(rng);

  const Eigen::VectorXd analytic = positional_encoding_backward(x, L, g);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fd =
        (g.dot(positional_encoding(xp, L)) - g.dot(positional_encoding(xm, L))) / (2 * h);
    CHECK(analytic[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("zero-last-layer init maps everything to zero") {
  MlpSpec spec;
  spec.input_dim = 5;
  spec.hidden_dims = {16, 16};
  spec.output_dim = 3;
  spec.init = InitScheme::zero_last_layer;
  const MlpParams p = init_mlp(spec, 1);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = d(rng);
    CHECK(mlp_forward(spec, p, x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("single affine layer is exact") {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.output_dim = 2;
  MlpParams p = init_mlp(spec, 9);
  Eigen::VectorXd x(3);
  x << 0.5, -1.0, 2.0;
  const Eigen::VectorXd y = mlp_forward(spec, p, x);
  const Eigen::VectorXd expect = p.weights[0] * x + p.biases[0];
  CHECK((y - expect).cwiseAbs().maxCoeff() == 0.0);
}

namespace {

void fd_check_mlp(const MlpSpec& spec, std::uint64_t seed, double tol) {
  MlpParams p = init_mlp(spec, seed);
  std::mt19937 rng(static_cast<unsigned>(seed) + 100);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd x(spec.input_dim);
  for (int i = 0; i < x.size(); ++i) x[i] = d(rng);
  Eigen::VectorXd gy(spec.output_dim);
  for (int i = 0; i < gy.size(); ++i) gy[i] = d(rng);

  MlpCache cache;
  mlp_forward(spec, p, x, &cache);
  MlpParams grads = zeros_like(p);
  Eigen::VectorXd gx;
  mlp_backward(spec, p, cache, gy, grads, &gx);

  const Eigen::VectorXd flat = p.flatten();
  const Eigen::VectorXd gflat = grads.flatten();
  const double h = 1e-6;
  // Probe a deterministic subset of parameters plus every input coordinate.
  std::mt19937 pick(static_cast<unsigned>(seed));
  std::uniform_int_distribution<std::int64_t> idx(0, flat.size() - 1);
  for (int probe = 0; probe < 80; ++probe) {
    const std::int64_t k = idx(pick);
    Eigen::VectorXd fp = flat, fm = flat;
    fp[k] += h;
    fm[k] -= h;
    const double lp = gy.dot(mlp_forward(spec, unflatten_mlp(spec, fp), x));
    const double lm = gy.dot(mlp_forward(spec, unflatten_mlp(spec, fm), x));
    const double fd = (lp - lm) / (2 * h);
    const double tolk = tol * std::max(1.0, std::max(std::abs(fd), std::abs(gflat[k])));
    CHECK(std::abs(gflat[k] - fd) <= tolk);
  }
  for (int k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fd = (gy.dot(mlp_forward(spec, p, xp)) - gy.dot(mlp_forward(spec, p, xm))) / (2 * h);
    const double tolk = tol * std::max(1.0, std::max(std::abs(fd), std::abs(gx[k])));
    CHECK(std::abs(gx[k] - fd) <= tolk);
  }
}

}  // namespace

TEST_CASE("mlp gradients match finite differences on a small net") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {12, 12};
  spec.output_dim = 3;
  fd_check_mlp(spec, 7, 1e-4);
}

TEST_CASE("mlp gradients check out on the production architectures") {
  // Score head: position + appearance feature in, one sigmoid score out.
  MlpSpec score;
  score.input_dim = 3 + 4;
  score.hidden_dims = {64, 64};
  score.output_dim = 1;
  score.output_activation = OutputActivation::sigmoid;
  fd_check_mlp(score, 21, 1e-4);

  // Deformation trunk: encoded position and time in, (dx, dr, ds) out. The
  // finite-difference probe perturbs away from the zero init.
  MlpSpec deform;
  deform.input_dim = positional_encoding_dim(3, 8) + positional_encoding_dim(1, 4);
  deform.hidden_dims = {128, 128, 128, 128};
  deform.output_dim = 10;
  fd_check_mlp(deform, 33, 1e-4);
}

TEST_CASE("adam first step is the bias-corrected signed update") {
  AdamState state(3);
  Eigen::VectorXd params(3), grads(3);
  params << 1.0, -2.0, 0.5;
  grads << 0.3, -0.7, 0.0;
  const Eigen::VectorXd before = params;
  REQUIRE(adam_step(state, params, grads, 1e-2));
  // After bias correction the first step is -lr * sign(g) up to eps rounding.
  CHECK(params[0] == doctest::Approx(before[0] - 1e-2).epsilon(1e-9));
  CHECK(params[1] == doctest::Approx(before[1] + 1e-2).epsilon(1e-9));
  CHECK(params[2] == before[2]);  // zero gradient, zero moment
  CHECK(state.step == 1);
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  AdamState state(2);
  Eigen::VectorXd params(2), grads(2);
  params << 0.5, 0.5;
  grads << std::nan(""), 1.0;
  const Eigen::VectorXd before = params;
  CHECK(!adam_step(state, params, grads, 1e-2));
  CHECK((params - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.step == 0);
  CHECK(state.rejected_steps == 1);
  CHECK(state.m.cwiseAbs().maxCoeff() == 0.0);

  grads << 0.1, -0.1;
  CHECK(adam_step(state, params, grads, 1e-2));
  CHECK(state.step == 1);
}

TEST_CASE("adam moment compaction keeps surviving rows") {
  AdamState state(6);  // two parameters of stride 3
  for (int i = 0; i < 6; ++i) {
    state.m[i] = i;
    state.v[i] = 10 + i;
  }
  state.compact({1}, 3);
  REQUIRE(state.m.size() == 3);
  CHECK(state.m[0] == 3);
  CHECK(state.m[2] == 5);
  CHECK(state.v[0] == 13);
}

TEST_CASE("the full stack learns a 1d sine") {
  MlpSpec spec;
  spec.input_dim = 1;
  spec.hidden_dims = {32, 32};
  spec.output_dim = 1;
  MlpParams p = init_mlp(spec, 5);
  AdamState state(p.count());

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const int batch = 64;
  double mse = 1.0;
  for (int step = 0; step < 2000 && mse >= 1e-3; ++step) {
    MlpParams grads = zeros_like(p);
    mse = 0;
    for (int b = 0; b < batch; ++b) {
      Eigen::VectorXd x(1);
      x << d(rng);
      MlpCache cache;
      const Eigen::VectorXd y = mlp_forward(spec, p, x, &cache);
      const double err = y[0] - std::sin(M_PI * x[0]);
      mse += err * err / batch;
      Eigen::VectorXd gy(1);
      gy << 2.0 * err / batch;
      mlp_backward(spec, p, cache, gy, grads);
    }
    Eigen::VectorXd flat = p.flatten();
    adam_step(state, flat, grads.flatten(), 3e-3);
    p = unflatten_mlp(spec, flat);
  }
  CHECK(mse < 1e-3);
}
