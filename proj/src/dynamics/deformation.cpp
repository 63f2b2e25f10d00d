// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/dynamics/deformation.hpp"

#include <cmath>
#include <stdexcept>

#include "hsplat/nn/encoding.hpp"
#include "hsplat/parallel.hpp"

namespace hsplat {
namespace {

Eigen::VectorXd encode_input(const DeformationField& field, const Eigen::Vector3d& pos_norm,
                             double t_norm) {
  Eigen::VectorXd enc(field.input_dim());
  enc.head(positional_encoding_dim(3, field.pos_freqs)) =
      positional_encoding(pos_norm, field.pos_freqs);
  Eigen::VectorXd tv(1);
  tv[0] = t_norm;
  enc.tail(positional_encoding_dim(1, field.time_freqs)) =
      positional_encoding(tv, field.time_freqs);
  return enc;
}

DeformDelta split_output(const Eigen::VectorXd& y) {
  DeformDelta d;
  d.dx = y.segment<3>(0);
  d.dr = y.segment<4>(3);
  d.ds = y.segment<3>(7);
  return d;
}

}  // namespace

int DeformationField::input_dim() const {
  return positional_encoding_dim(3, pos_freqs) + positional_encoding_dim(1, time_freqs);
}

void DeformationField::validate() const {
  spec.validate();
  if (spec.input_dim != input_dim() || spec.output_dim != 10) {
    throw std::invalid_argument("DeformationField: spec dimensions inconsistent");
  }
  if (!(scene_scale > 0) || !(time_scale > 0)) {
    throw std::invalid_argument("DeformationField: normalization scales must be positive");
  }
  if (static_cast<int>(params.weights.size()) != spec.layer_count()) {
    throw std::invalid_argument("DeformationField: parameter layer count mismatch");
  }
}

DeformationField make_deformation_field(double scene_scale, double time_scale,
                                        std::uint64_t seed, int hidden, int depth,
                                        int pos_freqs, int time_freqs) {
  if (hidden < 1 || depth < 1 || pos_freqs < 0 || time_freqs < 0) {
    throw std::invalid_argument("make_deformation_field: bad architecture");
  }
  DeformationField field;
  field.pos_freqs = pos_freqs;
  field.time_freqs = time_freqs;
  field.scene_scale = scene_scale > 0 ? scene_scale : 1.0;
  field.time_scale = time_scale > 0 ? time_scale : 1.0;
  field.spec.input_dim = field.input_dim();
  field.spec.hidden_dims.assign(static_cast<size_t>(depth), hidden);
  field.spec.output_dim = 10;
  field.spec.output_activation = OutputActivation::none;
  field.spec.init = InitScheme::zero_last_layer;
  field.params = init_mlp(field.spec, seed);
  return field;
}

std::vector<DeformDelta> deform(const DeformationField& field,
                                std::span<const Eigen::Vector3d> positions, double t) {
  DeformCache cache;
  return deform_with_cache(field, positions, t, cache);
}

std::vector<DeformDelta> deform_with_cache(const DeformationField& field,
                                           std::span<const Eigen::Vector3d> positions,
                                           double t, DeformCache& cache) {
  field.validate();
  if (!std::isfinite(t)) throw std::invalid_argument("deform: non-finite time");
  for (const Eigen::Vector3d& p : positions) {
    if (!p.allFinite()) throw std::invalid_argument("deform: non-finite position");
  }
  const std::int64_t n = static_cast<std::int64_t>(positions.size());
  cache.mlp.resize(positions.size());
  cache.pos_norm.resize(positions.size());
  cache.t_norm = t / field.time_scale;
  std::vector<DeformDelta> deltas(positions.size());
  parallel_for(n, [&](std::int64_t i) {
    const size_t k = static_cast<size_t>(i);
    cache.pos_norm[k] = positions[k] / field.scene_scale;
    const Eigen::VectorXd enc = encode_input(field, cache.pos_norm[k], cache.t_norm);
    deltas[k] = split_output(mlp_forward(field.spec, field.params, enc, &cache.mlp[k]));
  });
  return deltas;
}

void deform_backward(const DeformationField& field, const DeformCache& cache,
                     std::span<const DeformDelta> g_deltas, MlpParams& param_grads,
                     std::vector<Eigen::Vector3d>* g_positions) {
  if (g_deltas.size() != cache.mlp.size()) {
    throw std::invalid_argument("deform_backward: cache/gradient size mismatch");
  }
  const std::int64_t n = static_cast<std::int64_t>(g_deltas.size());
  const int pos_dim = positional_encoding_dim(3, field.pos_freqs);
  if (g_positions) g_positions->assign(g_deltas.size(), Eigen::Vector3d::Zero());

  // Fixed-size chunks keep the accumulation order worker-count independent.
  constexpr std::int64_t kChunk = 256;
  const auto chunks = make_chunks(n, kChunk);
  std::vector<MlpParams> partial(chunks.size());
  parallel_for(static_cast<std::int64_t>(chunks.size()), [&](std::int64_t c) {
    MlpParams& acc = partial[static_cast<size_t>(c)];
    acc = zeros_like(field.params);
    Eigen::VectorXd g_out(10), g_enc;
    for (std::int64_t i = chunks[static_cast<size_t>(c)].begin;
         i < chunks[static_cast<size_t>(c)].end; ++i) {
      const size_t k = static_cast<size_t>(i);
      g_out.segment<3>(0) = g_deltas[k].dx;
      g_out.segment<4>(3) = g_deltas[k].dr;
      g_out.segment<3>(7) = g_deltas[k].ds;
      mlp_backward(field.spec, field.params, cache.mlp[k], g_out, acc,
                   g_positions ? &g_enc : nullptr);
      if (g_positions) {
        const Eigen::Vector3d g_pos_norm = positional_encoding_backward(
            cache.pos_norm[k], field.pos_freqs, g_enc.head(pos_dim));
        (*g_positions)[k] = g_pos_norm / field.scene_scale;
      }
    }
  });
  for (const MlpParams& acc : partial) {
    for (size_t l = 0; l < acc.weights.size(); ++l) {
      param_grads.weights[l] += acc.weights[l];
      param_grads.biases[l] += acc.biases[l];
    }
  }
}

Gaussian3D apply_delta(const Gaussian3D& g, const DeformDelta& d) {
  Gaussian3D out = g;
  out.position += d.dx;
  Eigen::Vector4d r = g.rotation + d.dr;
  const double norm = r.norm();
  out.rotation = r / (norm > 1e-12 ? norm : 1.0);
  out.log_scale += d.ds;
  return out;
}

std::vector<Gaussian3D> apply_deformation(std::span<const Gaussian3D> canonical,
                                          const DeformationField& field, double t) {
  std::vector<Eigen::Vector3d> positions(canonical.size());
  for (size_t i = 0; i < canonical.size(); ++i) positions[i] = canonical[i].position;
  const std::vector<DeformDelta> deltas = deform(field, positions, t);
  std::vector<Gaussian3D> out(canonical.size());
  for (size_t i = 0; i < canonical.size(); ++i) out[i] = apply_delta(canonical[i], deltas[i]);
  return out;
}

}  // namespace hsplat
