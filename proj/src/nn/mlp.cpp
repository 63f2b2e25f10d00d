// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/nn/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hsplat/core/types.hpp"

namespace hsplat {

namespace {

std::vector<std::pair<int, int>> layer_shapes(const MlpSpec& spec) {
  std::vector<std::pair<int, int>> shapes;  // (out, in)
  int in = spec.input_dim;
  for (int h : spec.hidden_dims) {
    shapes.emplace_back(h, in);
    in = h;
  }
  shapes.emplace_back(spec.output_dim, in);
  return shapes;
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("MlpSpec: input and output dims must be >= 1");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
  }
}

std::int64_t MlpParams::count() const {
  std::int64_t n = 0;
  for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(count());
  std::int64_t off = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    const Eigen::MatrixXd& w = weights[l];
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) flat[off++] = w(r, c);
    for (int r = 0; r < biases[l].size(); ++r) flat[off++] = biases[l][r];
  }
  return flat;
}

MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  MlpParams p;
  const auto shapes = layer_shapes(spec);
  for (size_t l = 0; l < shapes.size(); ++l) {
    const auto [out, in] = shapes[l];
    Eigen::MatrixXd w(out, in);
    const bool zero_layer = spec.init == InitScheme::zero_last_layer && l + 1 == shapes.size();
    if (zero_layer) {
      w.setZero();
    } else {
      const double bound = std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) w(r, c) = dist(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams z;
  for (size_t l = 0; l < p.weights.size(); ++l) {
    z.weights.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    z.biases.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
  }
  return z;
}

MlpParams unflatten_mlp(const MlpSpec& spec, const Eigen::VectorXd& flat) {
  spec.validate();
  MlpParams p;
  const auto shapes = layer_shapes(spec);
  std::int64_t off = 0;
  for (const auto [out, in] : shapes) {
    if (off + static_cast<std::int64_t>(out) * in + out > flat.size()) {
      throw std::invalid_argument("unflatten_mlp: parameter vector too short");
    }
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = flat[off++];
    Eigen::VectorXd b(out);
    for (int r = 0; r < out; ++r) b[r] = flat[off++];
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (off != flat.size()) {
    throw std::invalid_argument("unflatten_mlp: parameter vector too long");
  }
  return p;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            const Eigen::VectorXd& x, MlpCache* cache) {
  if (x.size() != spec.input_dim) {
    throw std::invalid_argument("mlp_forward: input size mismatch");
  }
  if (static_cast<int>(params.weights.size()) != spec.layer_count()) {
    throw std::invalid_argument("mlp_forward: parameter/spec layer-count mismatch");
  }
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(params.weights.size());
  }
  Eigen::VectorXd h = x;
  const int layers = spec.layer_count();
  for (int l = 0; l < layers; ++l) {
    if (cache) cache->inputs.push_back(h);
    h = params.weights[static_cast<size_t>(l)] * h + params.biases[static_cast<size_t>(l)];
    if (l + 1 < layers) {
      h = h.cwiseMax(0.0);
    } else if (spec.output_activation == OutputActivation::sigmoid) {
      for (int i = 0; i < h.size(); ++i) h[i] = sigmoid(h[i]);
    }
  }
  if (cache) cache->output = h;
  return h;
}

void mlp_backward(const MlpSpec& spec, const MlpParams& params, const MlpCache& cache,
                  const Eigen::VectorXd& g_output, MlpParams& param_grads,
                  Eigen::VectorXd* g_x) {
  const int layers = spec.layer_count();
  if (static_cast<int>(cache.inputs.size()) != layers) {
    throw std::invalid_argument("mlp_backward: cache does not match spec");
  }
  if (g_output.size() != spec.output_dim) {
    throw std::invalid_argument("mlp_backward: output gradient size mismatch");
  }
  Eigen::VectorXd g = g_output;
  if (spec.output_activation == OutputActivation::sigmoid) {
    // cache.output holds the post-sigmoid values.
    for (int i = 0; i < g.size(); ++i) {
      const double y = cache.output[i];
      g[i] *= y * (1.0 - y);
    }
  }
  for (int l = layers - 1; l >= 0; --l) {
    const size_t li = static_cast<size_t>(l);
    if (l + 1 < layers) {
      // g currently refers to the post-ReLU output of layer l; gate it by the
      // sign of that output (recomputed from the next layer's cached input).
      const Eigen::VectorXd& relu_out = cache.inputs[li + 1];
      for (int i = 0; i < g.size(); ++i) {
        if (relu_out[i] <= 0.0) g[i] = 0.0;
      }
    }
    param_grads.weights[li].noalias() += g * cache.inputs[li].transpose();
    param_grads.biases[li] += g;
    if (l > 0 || g_x) g = params.weights[li].transpose() * g;
  }
  if (g_x) *g_x = g;
}

}  // namespace hsplat
