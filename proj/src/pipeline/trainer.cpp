// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "hsplat/decomp/decomposition.hpp"
#include "hsplat/eval/metrics.hpp"
#include "hsplat/nn/adam.hpp"
#include "hsplat/pipeline/init.hpp"
#include "hsplat/pipeline/losses.hpp"
#include "hsplat/pipeline/param_groups.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace hsplat {
namespace {

// Sub-seeds for the two networks, derived from the run seed so one config
// field controls every random draw.
constexpr std::uint64_t kScoreSeedSalt = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kDeformSeedSalt = 0xD1B54A32D192ED03ull;

std::vector<int> training_frames(int frame_count, const std::vector<int>& holdout) {
  std::vector<char> held(static_cast<size_t>(frame_count), 0);
  for (int f : holdout) {
    if (f < 0 || f >= frame_count) {
      throw std::invalid_argument("holdout frame " + std::to_string(f) + " out of range");
    }
    held[static_cast<size_t>(f)] = 1;
  }
  std::vector<int> frames;
  for (int f = 0; f < frame_count; ++f) {
    if (!held[static_cast<size_t>(f)]) frames.push_back(f);
  }
  if (frames.empty()) throw std::invalid_argument("every frame is held out");
  return frames;
}

RenderGrads slice_grads(const RenderGrads& g, size_t begin, size_t count, int coeffs) {
  RenderGrads out;
  out.positions.assign(g.positions.begin() + static_cast<std::ptrdiff_t>(begin),
                       g.positions.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.rotations.assign(g.rotations.begin() + static_cast<std::ptrdiff_t>(begin),
                       g.rotations.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.log_scales.assign(g.log_scales.begin() + static_cast<std::ptrdiff_t>(begin),
                        g.log_scales.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.opacity_logits.assign(g.opacity_logits.begin() + static_cast<std::ptrdiff_t>(begin),
                            g.opacity_logits.begin() + static_cast<std::ptrdiff_t>(begin + count));
  const size_t c = static_cast<size_t>(coeffs);
  out.sh.assign(g.sh.begin() + static_cast<std::ptrdiff_t>(begin * c),
                g.sh.begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  return out;
}

double tail_mean(const std::vector<double>& v, size_t window) {
  if (v.empty()) return 0.0;
  const size_t n = std::min(window, v.size());
  double sum = 0;
  for (size_t i = v.size() - n; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(n);
}

}  // namespace

HybridTrainReport optimize_hybrid(HybridScene& scene, const ReferenceBundle& bundle,
                                  const PipelineConfig& cfg) {
  cfg.validate();
  bundle.validate();
  scene.validate();
  const std::vector<int> frames = training_frames(bundle.frame_count(), cfg.holdout_frames);
  const int coeffs = sh_coeff_count(scene.sh_degree);

  HybridTrainReport report;
  report.static_start = scene.static_gaussians.size();
  report.dynamic_start = scene.dynamic_gaussians.size();

  GaussianAdam static_adam(static_cast<std::int64_t>(scene.static_gaussians.size()), coeffs);
  GaussianAdam dynamic_adam(static_cast<std::int64_t>(scene.dynamic_gaussians.size()), coeffs);
  Eigen::VectorXd deform_flat;
  AdamState deform_state;
  if (scene.deform) {
    deform_flat = scene.deform->params.flatten();
    deform_state = AdamState(deform_flat.size());
  }

  RenderOptions ropts;
  ropts.background = scene.background;

  for (int iter = 0; iter < cfg.hybrid_iters; ++iter) {
    if (cfg.prune_interval > 0 && iter > 0 && iter % cfg.prune_interval == 0) {
      const size_t before_s = scene.static_gaussians.size();
      const auto keep_s = prune_low_opacity(scene.static_gaussians, cfg.prune_min_alpha);
      if (keep_s.size() != before_s) {
        static_adam.compact(keep_s);
        if (!scene.static_cluster_ids.empty()) compact_by_keep(scene.static_cluster_ids, keep_s);
      }
      const size_t before_d = scene.dynamic_gaussians.size();
      const auto keep_d = prune_low_opacity(scene.dynamic_gaussians, cfg.prune_min_alpha);
      if (keep_d.size() != before_d) {
        dynamic_adam.compact(keep_d);
        if (!scene.dynamic_cluster_ids.empty()) compact_by_keep(scene.dynamic_cluster_ids, keep_d);
        if (scene.dynamic_gaussians.empty()) scene.deform.reset();
      }
    }

    const Frame& fr = bundle.frames[static_cast<size_t>(frames[static_cast<size_t>(iter) % frames.size()])];
    const double t = fr.pose.timestamp_index;
    const size_t ns = scene.static_gaussians.size();
    const size_t nd = scene.dynamic_gaussians.size();

    std::vector<Gaussian3D> combined;
    combined.reserve(ns + nd);
    combined.insert(combined.end(), scene.static_gaussians.begin(), scene.static_gaussians.end());

    DeformCache cache;
    std::vector<DeformDelta> deltas;
    std::vector<double> u_norms(nd, 1.0);
    if (nd > 0) {
      std::vector<Eigen::Vector3d> dyn_pos(nd);
      for (size_t i = 0; i < nd; ++i) dyn_pos[i] = scene.dynamic_gaussians[i].position;
      deltas = deform_with_cache(*scene.deform, dyn_pos, t, cache);
      for (size_t i = 0; i < nd; ++i) {
        // Same guard as apply_delta: a near-zero sum keeps the raw direction.
        const double norm = (scene.dynamic_gaussians[i].rotation + deltas[i].dr).norm();
        u_norms[i] = norm > 1e-12 ? norm : 1.0;
        combined.push_back(apply_delta(scene.dynamic_gaussians[i], deltas[i]));
      }
    }

    const GaussianSnapshot snap = make_snapshot(combined, scene.sh_degree);
    RenderOutput out = render(snap, fr.pose, ropts);
    PhotometricLoss loss = photometric_loss(out.color, fr.image, cfg.lambda_l1, cfg.lambda_ssim);
    if (!std::isfinite(loss.total)) {
      report.diverged = true;
      break;
    }
    report.loss_history.push_back(loss.total);
    report.iterations_run = iter + 1;

    UpstreamGrad up;
    up.color = std::move(loss.grad);
    const RenderGrads g = render_backward(snap, fr.pose, ropts, up);

    RenderGrads sg = slice_grads(g, 0, ns, coeffs);
    static_adam.step(scene.static_gaussians, sg, cfg.gaussian_lr, scene.scene_scale);

    if (nd > 0) {
      RenderGrads dg = slice_grads(g, ns, nd, coeffs);
      // The rasterizer reports the gradient for the normalized quaternion of
      // the composed rotation u = r + dr; dividing by |u| maps it back to
      // both addends. Position and log-scale offsets are additive, so those
      // gradients pass through unchanged.
      std::vector<DeformDelta> g_deltas(nd);
      for (size_t i = 0; i < nd; ++i) {
        dg.rotations[i] /= u_norms[i];
        g_deltas[i].dx = dg.positions[i];
        g_deltas[i].dr = dg.rotations[i];
        g_deltas[i].ds = dg.log_scales[i];
      }
      MlpParams field_grads = zeros_like(scene.deform->params);
      std::vector<Eigen::Vector3d> g_chain;
      deform_backward(*scene.deform, cache, g_deltas, field_grads, &g_chain);
      for (size_t i = 0; i < nd; ++i) dg.positions[i] += g_chain[i];

      dynamic_adam.step(scene.dynamic_gaussians, dg, cfg.gaussian_lr, scene.scene_scale);
      if (adam_step(deform_state, deform_flat, field_grads.flatten(), cfg.deform_lr)) {
        scene.deform->params = unflatten_mlp(scene.deform->spec, deform_flat);
      }
    }
  }

  report.static_end = scene.static_gaussians.size();
  report.dynamic_end = scene.dynamic_gaussians.size();
  scene.validate();
  return report;
}

HybridScene generate_scene(const ReferenceBundle& bundle, const PipelineConfig& cfg,
                           nlohmann::json* metrics) {
  cfg.validate();
  bundle.validate();
  const int frame_count = bundle.frame_count();
  const std::vector<int> train = training_frames(frame_count, cfg.holdout_frames);

  InitConfig icfg;
  icfg.pixel_stride = cfg.init_pixel_stride;
  icfg.frame_stride = cfg.init_frame_stride;
  icfg.sh_degree = cfg.sh_degree;
  icfg.skip_frames = cfg.holdout_frames;
  InitResult init = init_gaussians_from_bundle(bundle, icfg);
  const double scene_scale = init.scene_scale;
  const size_t init_count = init.gaussians.size();

  PrepassConfig pcfg;
  pcfg.iters = cfg.prepass_iters;
  pcfg.lr = cfg.gaussian_lr;
  pcfg.lambda_l1 = cfg.lambda_l1;
  pcfg.lambda_ssim = cfg.lambda_ssim;
  pcfg.prune_interval = cfg.prune_interval;
  pcfg.prune_min_alpha = cfg.prune_min_alpha;
  pcfg.sh_degree = cfg.sh_degree;
  pcfg.frames = train;
  const PrepassReport prep = optimize_static_prepass(init.gaussians, bundle, scene_scale, pcfg);

  const size_t n = init.gaussians.size();
  std::vector<std::uint8_t> labels;
  std::vector<int> cluster_ids;
  nlohmann::json decomp_json;
  decomp_json["skipped"] = cfg.force_all_dynamic;
  if (cfg.force_all_dynamic) {
    labels.assign(n, 1);
    for (Gaussian3D& g : init.gaussians) g.dynamic_score = 1.0;
  } else {
    const GaussianSnapshot snap = make_snapshot(init.gaussians, cfg.sh_degree);
    RenderOptions ropts;
    ropts.background = bundle.background;
    std::vector<ImageD> renders, refs;
    renders.reserve(train.size());
    refs.reserve(train.size());
    for (int f : train) {
      renders.push_back(render(snap, bundle.frames[static_cast<size_t>(f)].pose, ropts).color);
      refs.push_back(bundle.frames[static_cast<size_t>(f)].image);
    }
    const ErrorMapSet maps = compute_error_maps(renders, refs);

    ScoreField field = make_score_field(bundle.feature_dim, scene_scale,
                                        cfg.seed ^ kScoreSeedSalt, cfg.score_hidden);
    const ScoreTrainConfig scfg{cfg.score_iters, cfg.score_lr};
    const ScoreTrainReport srep = train_score_field(field, init.gaussians, bundle, maps, train, scfg);

    std::vector<double> scores(n);
    for (size_t i = 0; i < n; ++i) scores[i] = init.gaussians[i].dynamic_score;
    const std::vector<std::uint8_t> pre = threshold_split(scores, cfg.tau);

    ClusterParams cp;
    cp.eps = cfg.cluster_eps;
    cp.min_pts = cfg.cluster_min_pts;
    cp.feature_weight = cfg.cluster_feature_weight;
    cp.vote_threshold = cfg.cluster_vote_threshold;
    cp.scene_scale = scene_scale;
    GroupingResult grouping = cluster_group(init.gaussians, pre, cp);
    labels = std::move(grouping.labels);
    cluster_ids = std::move(grouping.cluster_ids);

    size_t pre_dynamic = 0, post_dynamic = 0;
    for (size_t i = 0; i < n; ++i) {
      pre_dynamic += pre[i];
      post_dynamic += labels[i];
    }
    decomp_json["score_initial_bce"] = srep.initial_bce;
    decomp_json["score_final_bce"] = srep.final_bce;
    decomp_json["dynamic_before_grouping"] = pre_dynamic;
    decomp_json["dynamic_after_grouping"] = post_dynamic;
    decomp_json["clusters"] = grouping.cluster_count;
    decomp_json["flipped"] = grouping.flipped;
    decomp_json["eps"] = grouping.eps_used;
    decomp_json["tau"] = cfg.tau;
  }

  HybridScene scene;
  scene.scene_scale = scene_scale;
  scene.sh_degree = cfg.sh_degree;
  scene.background = bundle.background;
  scene.time_min = 0;
  scene.time_max = frame_count - 1;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i]) {
      scene.dynamic_gaussians.push_back(std::move(init.gaussians[i]));
      if (!cluster_ids.empty()) scene.dynamic_cluster_ids.push_back(cluster_ids[i]);
    } else {
      scene.static_gaussians.push_back(std::move(init.gaussians[i]));
      if (!cluster_ids.empty()) scene.static_cluster_ids.push_back(cluster_ids[i]);
    }
  }
  if (!scene.dynamic_gaussians.empty()) {
    const double time_scale = frame_count > 1 ? static_cast<double>(frame_count - 1) : 1.0;
    scene.deform = make_deformation_field(scene_scale, time_scale, cfg.seed ^ kDeformSeedSalt,
                                          cfg.deform_hidden, cfg.deform_depth,
                                          cfg.deform_pos_freqs, cfg.deform_time_freqs);
  }
  const size_t static_before = scene.static_gaussians.size();
  const size_t dynamic_before = scene.dynamic_gaussians.size();

  const HybridTrainReport hrep = optimize_hybrid(scene, bundle, cfg);

  if (metrics != nullptr) {
    nlohmann::json j;
    j["init"] = {{"count", init_count}, {"scene_scale", scene_scale}};
    j["prepass"] = {{"iterations", prep.loss_history.size()},
                    {"start_count", prep.start_count},
                    {"end_count", prep.end_count},
                    {"final_loss", prep.final_loss_avg}};
    j["decomposition"] = decomp_json;
    j["partition"] = {{"static_count", static_before}, {"dynamic_count", dynamic_before}};
    j["hybrid"] = {{"iterations", hrep.iterations_run},
                   {"diverged", hrep.diverged},
                   {"final_loss", tail_mean(hrep.loss_history, train.size())},
                   {"static_count", hrep.static_end},
                   {"dynamic_count", hrep.dynamic_end}};
    j["loss"] = {{"prepass", prep.loss_history}, {"hybrid", hrep.loss_history}};

    RenderOptions ropts;
    ropts.background = scene.background;
    const auto psnr_block = [&](const std::vector<int>& frames_list) {
      nlohmann::json per = nlohmann::json::array();
      double sum = 0;
      for (int f : frames_list) {
        const Frame& fr = bundle.frames[static_cast<size_t>(f)];
        const GaussianSnapshot snap = compose_scene_at_t(scene, fr.pose.timestamp_index);
        const double p = psnr(render(snap, fr.pose, ropts).color, fr.image);
        per.push_back(p);
        sum += p;
      }
      nlohmann::json block;
      block["frames"] = frames_list;
      block["per_frame"] = per;
      block["mean"] = frames_list.empty() ? 0.0 : sum / static_cast<double>(frames_list.size());
      return block;
    };
    j["psnr_train"] = psnr_block(train);
    if (!cfg.holdout_frames.empty()) j["psnr_holdout"] = psnr_block(cfg.holdout_frames);
    *metrics = std::move(j);
  }
  return scene;
}

}  // namespace hsplat
