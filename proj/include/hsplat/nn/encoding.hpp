// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace hsplat {

// Fourier feature map gamma(x) = [x, sin(2^k pi x), cos(2^k pi x)] for
// k = 0..num_freqs-1, applied component-wise. Output size d + 2*L*d with the
// identity block first, then per frequency a sin block and a cos block.
Eigen::VectorXd positional_encoding(const Eigen::VectorXd& x, int num_freqs);

inline int positional_encoding_dim(int d, int num_freqs) { return d + 2 * num_freqs * d; }

// Pulls a gradient w.r.t. the encoding back to the input vector.
Eigen::VectorXd positional_encoding_backward(const Eigen::VectorXd& x, int num_freqs,
                                             const Eigen::VectorXd& g_encoded);

}  // namespace hsplat
