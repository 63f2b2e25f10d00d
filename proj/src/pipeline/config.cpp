// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace hsplat {
namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: field '") + key + "' has the wrong type");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (sh_degree < 0 || sh_degree > 3) throw std::invalid_argument("config: sh_degree out of range");
  if (init_pixel_stride < 1 || init_frame_stride < 1) {
    throw std::invalid_argument("config: init strides must be >= 1");
  }
  if (prepass_iters < 0 || score_iters < 0 || hybrid_iters < 0) {
    throw std::invalid_argument("config: iteration counts must be >= 0");
  }
  for (double lr : {gaussian_lr.position, gaussian_lr.rotation, gaussian_lr.log_scale,
                    gaussian_lr.opacity, gaussian_lr.sh, score_lr, deform_lr}) {
    if (!(lr >= 0)) throw std::invalid_argument("config: learning rates must be >= 0");
  }
  if (!(lambda_l1 >= 0) || !(lambda_ssim >= 0)) {
    throw std::invalid_argument("config: loss weights must be >= 0");
  }
  if (tau < 0 || tau > 1) throw std::invalid_argument("config: tau outside [0, 1]");
  if (cluster_min_pts < 1) throw std::invalid_argument("config: cluster_min_pts must be >= 1");
  if (cluster_vote_threshold < 0 || cluster_vote_threshold > 1) {
    throw std::invalid_argument("config: cluster_vote_threshold outside [0, 1]");
  }
  if (prune_interval < 0) throw std::invalid_argument("config: prune_interval must be >= 0");
  if (prune_min_alpha < 0 || prune_min_alpha >= 1) {
    throw std::invalid_argument("config: prune_min_alpha outside [0, 1)");
  }
  if (deform_hidden < 1 || deform_depth < 1 || score_hidden < 1) {
    throw std::invalid_argument("config: network sizes must be >= 1");
  }
  if (deform_pos_freqs < 0 || deform_time_freqs < 0) {
    throw std::invalid_argument("config: encoding frequencies must be >= 0");
  }
  for (int f : holdout_frames) {
    if (f < 0) throw std::invalid_argument("config: holdout frame indices must be >= 0");
  }
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::set<std::string> known = [] {
    std::set<std::string> k;
    const nlohmann::json defaults = config_to_json(PipelineConfig{});
    for (const auto& item : defaults.items()) k.insert(item.key());
    return k;
  }();
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("config: unknown field '" + item.key() + "'");
    }
  }
  PipelineConfig c;
  read_field(j, "sh_degree", c.sh_degree);
  read_field(j, "init_pixel_stride", c.init_pixel_stride);
  read_field(j, "init_frame_stride", c.init_frame_stride);
  read_field(j, "prepass_iters", c.prepass_iters);
  read_field(j, "score_iters", c.score_iters);
  read_field(j, "hybrid_iters", c.hybrid_iters);
  read_field(j, "lr_position", c.gaussian_lr.position);
  read_field(j, "lr_rotation", c.gaussian_lr.rotation);
  read_field(j, "lr_log_scale", c.gaussian_lr.log_scale);
  read_field(j, "lr_opacity", c.gaussian_lr.opacity);
  read_field(j, "lr_sh", c.gaussian_lr.sh);
  read_field(j, "score_lr", c.score_lr);
  read_field(j, "deform_lr", c.deform_lr);
  read_field(j, "tau", c.tau);
  read_field(j, "cluster_eps", c.cluster_eps);
  read_field(j, "cluster_min_pts", c.cluster_min_pts);
  read_field(j, "cluster_feature_weight", c.cluster_feature_weight);
  read_field(j, "cluster_vote_threshold", c.cluster_vote_threshold);
  read_field(j, "lambda_l1", c.lambda_l1);
  read_field(j, "lambda_ssim", c.lambda_ssim);
  read_field(j, "prune_interval", c.prune_interval);
  read_field(j, "prune_min_alpha", c.prune_min_alpha);
  read_field(j, "seed", c.seed);
  read_field(j, "holdout_frames", c.holdout_frames);
  read_field(j, "force_all_dynamic", c.force_all_dynamic);
  read_field(j, "deform_hidden", c.deform_hidden);
  read_field(j, "deform_depth", c.deform_depth);
  read_field(j, "deform_pos_freqs", c.deform_pos_freqs);
  read_field(j, "deform_time_freqs", c.deform_time_freqs);
  read_field(j, "score_hidden", c.score_hidden);
  c.validate();
  return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  return nlohmann::json{{"sh_degree", c.sh_degree},
                        {"init_pixel_stride", c.init_pixel_stride},
                        {"init_frame_stride", c.init_frame_stride},
                        {"prepass_iters", c.prepass_iters},
                        {"score_iters", c.score_iters},
                        {"hybrid_iters", c.hybrid_iters},
                        {"lr_position", c.gaussian_lr.position},
                        {"lr_rotation", c.gaussian_lr.rotation},
                        {"lr_log_scale", c.gaussian_lr.log_scale},
                        {"lr_opacity", c.gaussian_lr.opacity},
                        {"lr_sh", c.gaussian_lr.sh},
                        {"score_lr", c.score_lr},
                        {"deform_lr", c.deform_lr},
                        {"tau", c.tau},
                        {"cluster_eps", c.cluster_eps},
                        {"cluster_min_pts", c.cluster_min_pts},
                        {"cluster_feature_weight", c.cluster_feature_weight},
                        {"cluster_vote_threshold", c.cluster_vote_threshold},
                        {"lambda_l1", c.lambda_l1},
                        {"lambda_ssim", c.lambda_ssim},
                        {"prune_interval", c.prune_interval},
                        {"prune_min_alpha", c.prune_min_alpha},
                        {"seed", c.seed},
                        {"holdout_frames", c.holdout_frames},
                        {"force_all_dynamic", c.force_all_dynamic},
                        {"deform_hidden", c.deform_hidden},
                        {"deform_depth", c.deform_depth},
                        {"deform_pos_freqs", c.deform_pos_freqs},
                        {"deform_time_freqs", c.deform_time_freqs},
                        {"score_hidden", c.score_hidden}};
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hsplat
