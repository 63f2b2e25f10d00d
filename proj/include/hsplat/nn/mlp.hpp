// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace hsplat {

enum class OutputActivation { none, sigmoid };
enum class InitScheme { xavier, zero_last_layer };

// Fully connected net: hidden layers use ReLU, the last layer is affine with
// an optional sigmoid on top.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;
  OutputActivation output_activation = OutputActivation::none;
  InitScheme init = InitScheme::xavier;

  int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
  // Throws std::invalid_argument when any dimension is < 1.
  void validate() const;
};

struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: out x in
  std::vector<Eigen::VectorXd> biases;

  std::int64_t count() const;
  // Layer-major, row-major weights then bias per layer.
  Eigen::VectorXd flatten() const;
};

MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed);
MlpParams zeros_like(const MlpParams& p);
MlpParams unflatten_mlp(const MlpSpec& spec, const Eigen::VectorXd& flat);

// Per-layer intermediates from a forward pass, consumed by the backward pass.
struct MlpCache {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  Eigen::VectorXd output;               // post output-activation
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const MlpParams& params,
                            const Eigen::VectorXd& x, MlpCache* cache = nullptr);

// Accumulates into param_grads (caller zeroes). g_x, when non-null, receives
// the input gradient for chaining into whatever produced x.
void mlp_backward(const MlpSpec& spec, const MlpParams& params, const MlpCache& cache,
                  const Eigen::VectorXd& g_output, MlpParams& param_grads,
                  Eigen::VectorXd* g_x = nullptr);

}  // namespace hsplat
