// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace hsplat {

// Bias-corrected Adam over one flat parameter vector. Callers keep one state
// per parameter group (per learning rate).
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  std::int64_t rejected_steps = 0;  // non-finite gradient batches, skipped

  explicit AdamState(std::int64_t n = 0)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  // Keeps optimizer history for the surviving subset of parameters. `keep`
  // holds old indices in their new order.
  void compact(const std::vector<std::int64_t>& keep, std::int64_t stride);
};

// In-place update; returns false (and leaves params, moments, and step count
// untouched) when grads contain a non-finite value.
bool adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               double lr);

}  // namespace hsplat
