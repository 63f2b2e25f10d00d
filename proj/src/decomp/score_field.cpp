// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <stdexcept>

#include "hsplat/decomp/decomposition.hpp"
#include "hsplat/nn/adam.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {
namespace {

constexpr double kBceClamp = 1e-6;
constexpr std::int64_t kChunk = 256;

Eigen::VectorXd field_input(const ScoreField& field, const Gaussian3D& g) {
  Eigen::VectorXd x(3 + field.feature_dim);
  x.head<3>() = g.position / field.scene_scale;
  x.tail(field.feature_dim) = g.feature;
  return x;
}

// Must run before any parallel region touches the inputs; a throw from a
// worker would terminate instead of propagating.
void require_feature_dim(const ScoreField& field, std::span<const Gaussian3D> gaussians) {
  for (const Gaussian3D& g : gaussians) {
    if (g.feature.size() != field.feature_dim) {
      throw std::invalid_argument("score field: feature dimension mismatch");
    }
  }
}

}  // namespace

ScoreField make_score_field(int feature_dim, double scene_scale, std::uint64_t seed,
                            int hidden) {
  if (feature_dim < 0 || hidden < 1) {
    throw std::invalid_argument("make_score_field: bad dimensions");
  }
  ScoreField field;
  field.spec.input_dim = 3 + feature_dim;
  field.spec.hidden_dims = {hidden, hidden};
  field.spec.output_dim = 1;
  field.spec.output_activation = OutputActivation::sigmoid;
  field.spec.init = InitScheme::xavier;
  field.params = init_mlp(field.spec, seed);
  field.scene_scale = scene_scale > 0 ? scene_scale : 1.0;
  field.feature_dim = feature_dim;
  return field;
}

std::vector<double> eval_score_field(const ScoreField& field,
                                     std::span<const Gaussian3D> gaussians) {
  require_feature_dim(field, gaussians);
  std::vector<double> scores(gaussians.size());
  parallel_for(static_cast<std::int64_t>(gaussians.size()), [&](std::int64_t i) {
    scores[static_cast<size_t>(i)] = mlp_forward(
        field.spec, field.params, field_input(field, gaussians[static_cast<size_t>(i)]))[0];
  });
  return scores;
}

double score_splat_bce(const ScoreField& field, std::span<const Gaussian3D> gaussians,
                       const CameraPose& pose, const ImageD& target, MlpParams* grads) {
  pose.validate();
  require_feature_dim(field, gaussians);
  if (target.height != pose.height || target.width != pose.width || target.channels != 1) {
    throw std::invalid_argument("score_splat_bce: target shape mismatch");
  }
  const std::int64_t n = static_cast<std::int64_t>(gaussians.size());

  std::vector<MlpCache> caches(grads ? gaussians.size() : 0);
  std::vector<double> scores(gaussians.size());
  parallel_for(n, [&](std::int64_t i) {
    scores[static_cast<size_t>(i)] =
        mlp_forward(field.spec, field.params, field_input(field, gaussians[static_cast<size_t>(i)]),
                    grads ? &caches[static_cast<size_t>(i)] : nullptr)[0];
  });

  GaussianSnapshot snapshot = make_snapshot(gaussians, 0);
  snapshot.payload = scores;
  RenderOptions options;
  options.payload = true;
  options.sh_degree = 0;
  const RenderOutput render_out = render(snapshot, pose, options);

  double loss = 0;
  UpstreamGrad upstream;
  if (grads) upstream.scalar = ImageD(pose.height, pose.width, 1, 0.0);
  const double npix = static_cast<double>(pose.height) * pose.width;
  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) {
      const double t = target.at(y, x);
      const double raw = render_out.scalar.at(y, x);
      const double s = std::clamp(raw, kBceClamp, 1.0 - kBceClamp);
      loss += -(t * std::log(s) + (1.0 - t) * std::log(1.0 - s));
      if (grads && raw > kBceClamp && raw < 1.0 - kBceClamp) {
        upstream.scalar.at(y, x) = (s - t) / (s * (1.0 - s)) / npix;
      }
    }
  }
  loss /= npix;
  if (!grads) return loss;

  const RenderGrads rg = render_backward(snapshot, pose, options, upstream);

  // Fixed-size chunks keep the parameter-gradient accumulation order
  // independent of the worker count.
  const auto chunks = make_chunks(n, kChunk);
  std::vector<MlpParams> partial(chunks.size());
  parallel_for(static_cast<std::int64_t>(chunks.size()), [&](std::int64_t c) {
    MlpParams& acc = partial[static_cast<size_t>(c)];
    acc = zeros_like(field.params);
    Eigen::VectorXd g_out(1);
    for (std::int64_t i = chunks[static_cast<size_t>(c)].begin;
         i < chunks[static_cast<size_t>(c)].end; ++i) {
      const double g = rg.payload[static_cast<size_t>(i)];
      if (g == 0.0) continue;
      g_out[0] = g;
      mlp_backward(field.spec, field.params, caches[static_cast<size_t>(i)], g_out, acc);
    }
  });
  for (const MlpParams& acc : partial) {
    for (size_t l = 0; l < acc.weights.size(); ++l) {
      grads->weights[l] += acc.weights[l];
      grads->biases[l] += acc.biases[l];
    }
  }
  return loss;
}

ScoreTrainReport train_score_field(ScoreField& field, std::vector<Gaussian3D>& gaussians,
                                   const ReferenceBundle& bundle, const ErrorMapSet& maps,
                                   const std::vector<int>& frame_indices,
                                   const ScoreTrainConfig& cfg) {
  if (frame_indices.size() != maps.normalized.size() || frame_indices.empty()) {
    throw std::invalid_argument("train_score_field: supervision frames/maps mismatch");
  }
  for (int f : frame_indices) {
    if (f < 0 || f >= bundle.frame_count()) {
      throw std::invalid_argument("train_score_field: frame index out of range");
    }
  }

  ScoreTrainReport report;
  const int cycle = static_cast<int>(frame_indices.size());
  AdamState adam(field.params.count());
  Eigen::VectorXd flat = field.params.flatten();
  double first_sum = 0, last_sum = 0;
  int first_n = 0, last_n = 0;
  for (int iter = 0; iter < cfg.iters; ++iter) {
    const int slot = iter % cycle;
    const int f = frame_indices[static_cast<size_t>(slot)];
    MlpParams grads = zeros_like(field.params);
    const double loss =
        score_splat_bce(field, gaussians, bundle.frames[static_cast<size_t>(f)].pose,
                        maps.normalized[static_cast<size_t>(slot)], &grads);
    if (iter < cycle) {
      first_sum += loss;
      ++first_n;
    }
    if (iter >= cfg.iters - cycle) {
      last_sum += loss;
      ++last_n;
    }
    adam_step(adam, flat, grads.flatten(), cfg.lr);
    field.params = unflatten_mlp(field.spec, flat);
  }
  report.initial_bce = first_n ? first_sum / first_n : 0;
  report.final_bce = last_n ? last_sum / last_n : report.initial_bce;
  report.iterations = cfg.iters;

  const std::vector<double> scores = eval_score_field(field, gaussians);
  for (size_t i = 0; i < gaussians.size(); ++i) gaussians[i].dynamic_score = scores[i];
  return report;
}

std::vector<std::uint8_t> threshold_split(std::span<const double> scores, double tau) {
  std::vector<std::uint8_t> labels(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > tau ? 1 : 0;
  return labels;
}

}  // namespace hsplat
