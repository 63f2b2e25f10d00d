// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hsplat {

void AdamState::compact(const std::vector<std::int64_t>& keep, std::int64_t stride) {
  Eigen::VectorXd nm(static_cast<std::int64_t>(keep.size()) * stride);
  Eigen::VectorXd nv(nm.size());
  for (size_t i = 0; i < keep.size(); ++i) {
    nm.segment(static_cast<std::int64_t>(i) * stride, stride) =
        m.segment(keep[i] * stride, stride);
    nv.segment(static_cast<std::int64_t>(i) * stride, stride) =
        v.segment(keep[i] * stride, stride);
  }
  m = std::move(nm);
  v = std::move(nv);
}

bool adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  if (!grads.allFinite()) {
    ++state.rejected_steps;
    return false;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::int64_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  return true;
}

}  // namespace hsplat
