// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/nn/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace hsplat {

Eigen::VectorXd positional_encoding(const Eigen::VectorXd& x, int num_freqs) {
  if (num_freqs < 0) throw std::invalid_argument("positional_encoding: negative frequency count");
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd out(positional_encoding_dim(d, num_freqs));
  out.head(d) = x;
  int off = d;
  double freq = M_PI;
  for (int k = 0; k < num_freqs; ++k, freq *= 2.0) {
    for (int i = 0; i < d; ++i) out[off + i] = std::sin(freq * x[i]);
    for (int i = 0; i < d; ++i) out[off + d + i] = std::cos(freq * x[i]);
    off += 2 * d;
  }
  return out;
}

Eigen::VectorXd positional_encoding_backward(const Eigen::VectorXd& x, int num_freqs,
                                             const Eigen::VectorXd& g_encoded) {
  const int d = static_cast<int>(x.size());
  if (g_encoded.size() != positional_encoding_dim(d, num_freqs)) {
    throw std::invalid_argument("positional_encoding_backward: gradient size mismatch");
  }
  Eigen::VectorXd g = g_encoded.head(d);
  int off = d;
  double freq = M_PI;
  for (int k = 0; k < num_freqs; ++k, freq *= 2.0) {
    for (int i = 0; i < d; ++i) {
      g[i] += g_encoded[off + i] * freq * std::cos(freq * x[i]);
      g[i] -= g_encoded[off + d + i] * freq * std::sin(freq * x[i]);
    }
    off += 2 * d;
  }
  return g;
}

}  // namespace hsplat
