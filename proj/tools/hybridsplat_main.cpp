// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: bundle synthesis, scene generation, rendering,
// evaluation, decomposition reporting, and trajectory planning. Exit codes:
// 0 success, 2 invalid input, 1 internal failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsplat/core/image.hpp"
#include "hsplat/eval/metrics.hpp"
#include "hsplat/eval/planning.hpp"
#include "hsplat/io/bundle_io.hpp"
#include "hsplat/io/png_io.hpp"
#include "hsplat/oracle/oracle.hpp"
#include "hsplat/parallel.hpp"
#include "hsplat/pipeline/config.hpp"
#include "hsplat/pipeline/scene_io.hpp"
#include "hsplat/pipeline/trainer.hpp"
#include "hsplat/raster/rasterizer.hpp"

namespace fs = std::filesystem;
using namespace hsplat;

namespace {

void log_line(const std::string& stage, const std::string& msg) {
  std::cout << "[" << stage << "] " << msg << std::endl;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All output files go through a temp + rename so a crash never leaves a
// half-written artifact at the target path.
void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot open " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

void save_scene_atomic(const HybridScene& scene, const std::string& path) {
  const std::string tmp = path + ".tmp";
  save_scene(scene, tmp);
  fs::rename(tmp, path);
}

std::string frame_file(const std::string& dir, const char* prefix, int index) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%04d.png", prefix, index);
  return (fs::path(dir) / name).string();
}

ImageU8 to_u8_gray(const ImageD& scalar) {
  ImageD clamped(scalar.height, scalar.width, 1);
  for (size_t i = 0; i < scalar.data.size(); ++i) {
    clamped.data[i] = std::min(1.0, std::max(0.0, scalar.data[i]));
  }
  return quantize_u8(clamped);
}

struct SynthArgs {
  std::string spec_path, out_dir;
  std::uint64_t seed = 1;
};

struct GenerateArgs {
  std::string bundle_dir, out_path, config_path, metrics_path;
  std::vector<int> holdout;
  std::optional<std::uint64_t> seed;
  std::optional<int> prepass_iters, hybrid_iters, score_iters;
  std::optional<int> pixel_stride, frame_stride;
  bool force_all_dynamic = false;
};

struct RenderArgs {
  std::string scene_path, out_dir, trajectory_path, bundle_dir;
  std::vector<int> frames;
};

struct EvalArgs {
  std::string scene_path, bundle_dir, out_path;
  std::vector<int> frames;
};

struct ReportArgs {
  std::string scene_path, out_dir, bundle_dir;
};

struct PlanArgs {
  std::string scene_path, trajectory_path, out_path, render_dir;
  std::optional<int> sweeps;
  std::optional<double> smoothness;
};

int run_synth(const SynthArgs& a) {
  const OracleSceneSpec spec = spec_from_json(read_text_file(a.spec_path));
  log_line("synth", "generating " + std::to_string(spec.trajectory.size()) + " frames");
  const ReferenceBundle bundle = generate_bundle(spec, a.seed);
  write_bundle(bundle, a.out_dir);
  log_line("synth", "bundle written to " + a.out_dir);
  return 0;
}

int run_generate(const GenerateArgs& a) {
  PipelineConfig cfg = a.config_path.empty() ? PipelineConfig{} : load_config(a.config_path);
  if (!a.holdout.empty()) cfg.holdout_frames = a.holdout;
  if (a.seed) cfg.seed = *a.seed;
  if (a.prepass_iters) cfg.prepass_iters = *a.prepass_iters;
  if (a.hybrid_iters) cfg.hybrid_iters = *a.hybrid_iters;
  if (a.score_iters) cfg.score_iters = *a.score_iters;
  if (a.pixel_stride) cfg.init_pixel_stride = *a.pixel_stride;
  if (a.frame_stride) cfg.init_frame_stride = *a.frame_stride;
  if (a.force_all_dynamic) cfg.force_all_dynamic = true;
  cfg.validate();

  const ReferenceBundle bundle = ingest_bundle(a.bundle_dir);
  log_line("ingest", std::to_string(bundle.frame_count()) + " frames, " +
                         std::to_string(bundle.width()) + "x" + std::to_string(bundle.height()) +
                         ", feature_dim " + std::to_string(bundle.feature_dim));
  {
    std::string holdout = "none";
    if (!cfg.holdout_frames.empty()) {
      holdout.clear();
      for (size_t i = 0; i < cfg.holdout_frames.size(); ++i) {
        holdout += (i ? "," : "") + std::to_string(cfg.holdout_frames[i]);
      }
    }
    log_line("config", "prepass " + std::to_string(cfg.prepass_iters) + ", hybrid " +
                           std::to_string(cfg.hybrid_iters) + ", holdout " + holdout +
                           (cfg.force_all_dynamic ? ", all-dynamic" : ""));
  }

  nlohmann::json metrics;
  const HybridScene scene = generate_scene(bundle, cfg, &metrics);

  log_line("init", std::to_string(metrics["init"]["count"].get<size_t>()) + " Gaussians, scale " +
                       std::to_string(metrics["init"]["scene_scale"].get<double>()));
  log_line("prepass", "final loss " + std::to_string(metrics["prepass"]["final_loss"].get<double>()) +
                          ", " + std::to_string(metrics["prepass"]["end_count"].get<size_t>()) +
                          " kept");
  if (!metrics["decomposition"]["skipped"].get<bool>()) {
    log_line("decompose",
             std::to_string(metrics["decomposition"]["dynamic_after_grouping"].get<size_t>()) +
                 " dynamic across " + std::to_string(metrics["decomposition"]["clusters"].get<int>()) +
                 " clusters");
  }
  log_line("hybrid", "static " + std::to_string(scene.static_gaussians.size()) + ", dynamic " +
                         std::to_string(scene.dynamic_gaussians.size()) +
                         (metrics["hybrid"]["diverged"].get<bool>() ? " (diverged)" : ""));
  if (metrics.contains("psnr_holdout")) {
    log_line("psnr", "train " + std::to_string(metrics["psnr_train"]["mean"].get<double>()) +
                         " dB, holdout " +
                         std::to_string(metrics["psnr_holdout"]["mean"].get<double>()) + " dB");
  } else {
    log_line("psnr", "train " + std::to_string(metrics["psnr_train"]["mean"].get<double>()) + " dB");
  }

  save_scene_atomic(scene, a.out_path);
  log_line("save", a.out_path);
  if (!a.metrics_path.empty()) write_json_atomic(a.metrics_path, metrics);
  return 0;
}

int run_render(const RenderArgs& a) {
  if (a.trajectory_path.empty() == a.bundle_dir.empty()) {
    throw std::invalid_argument("render: pass exactly one of --trajectory or --bundle");
  }
  const HybridScene scene = load_scene(a.scene_path);
  fs::create_directories(a.out_dir);

  if (!a.trajectory_path.empty()) {
    nlohmann::json traj;
    try {
      traj = nlohmann::json::parse(read_text_file(a.trajectory_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("render: invalid trajectory JSON: ") + e.what());
    }
    const std::vector<TrajectoryStep> steps = trajectory_from_json(traj);
    const std::vector<ImageD> images = render_trajectory(scene, steps);
    for (size_t i = 0; i < images.size(); ++i) {
      write_png(frame_file(a.out_dir, "step", static_cast<int>(i)), quantize_u8(images[i]));
    }
    log_line("render", std::to_string(images.size()) + " steps written to " + a.out_dir);
    return 0;
  }

  const ReferenceBundle bundle = ingest_bundle(a.bundle_dir);
  std::vector<int> frames = a.frames;
  if (frames.empty()) {
    for (int f = 0; f < bundle.frame_count(); ++f) frames.push_back(f);
  }
  RenderOptions opts;
  opts.background = scene.background;
  for (int f : frames) {
    if (f < 0 || f >= bundle.frame_count()) {
      throw std::invalid_argument("render: frame " + std::to_string(f) + " out of range");
    }
    const Frame& fr = bundle.frames[static_cast<size_t>(f)];
    const GaussianSnapshot snap = compose_scene_at_t(scene, fr.pose.timestamp_index);
    write_png(frame_file(a.out_dir, "frame", f), quantize_u8(render(snap, fr.pose, opts).color));
  }
  log_line("render", std::to_string(frames.size()) + " frames written to " + a.out_dir);
  return 0;
}

int run_eval(const EvalArgs& a) {
  const HybridScene scene = load_scene(a.scene_path);
  const ReferenceBundle bundle = ingest_bundle(a.bundle_dir);
  std::vector<int> frames = a.frames;
  if (frames.empty()) {
    for (int f = 0; f < bundle.frame_count(); ++f) frames.push_back(f);
  }

  RenderOptions opts;
  opts.background = scene.background;
  nlohmann::json per_frame = nlohmann::json::array();
  double psnr_sum = 0, ssim_sum = 0;
  for (int f : frames) {
    if (f < 0 || f >= bundle.frame_count()) {
      throw std::invalid_argument("eval: frame " + std::to_string(f) + " out of range");
    }
    const Frame& fr = bundle.frames[static_cast<size_t>(f)];
    const GaussianSnapshot snap = compose_scene_at_t(scene, fr.pose.timestamp_index);
    const ImageD rendered = render(snap, fr.pose, opts).color;
    const double p = psnr(rendered, fr.image);
    const double s = ssim(rendered, fr.image);
    per_frame.push_back({{"frame", f}, {"psnr", p}, {"ssim", s}});
    psnr_sum += p;
    ssim_sum += s;
  }

  nlohmann::json report;
  report["frames"] = per_frame;
  report["psnr_mean"] = psnr_sum / static_cast<double>(frames.size());
  report["ssim_mean"] = ssim_sum / static_cast<double>(frames.size());

  bool any_mask = false;
  for (const Frame& fr : bundle.frames) any_mask = any_mask || fr.dyn_mask.has_value();
  if (any_mask) {
    const IouReport iou = decomposition_iou(scene, bundle);
    report["iou_mean"] = iou.mean_iou;
    report["iou_frames"] = iou.frame_indices;
    report["iou_per_frame"] = iou.per_frame;
  } else {
    report["iou_mean"] = nullptr;
  }

  log_line("eval", "psnr " + std::to_string(report["psnr_mean"].get<double>()) + " dB, ssim " +
                       std::to_string(report["ssim_mean"].get<double>()));
  if (a.out_path.empty()) {
    std::cout << report.dump(2) << std::endl;
  } else {
    write_json_atomic(a.out_path, report);
  }
  return 0;
}

int run_report(const ReportArgs& a) {
  const HybridScene scene = load_scene(a.scene_path);
  fs::create_directories(a.out_dir);

  nlohmann::json gaussians = nlohmann::json::array();
  const auto add_entries = [&](const std::vector<Gaussian3D>& set, const std::vector<int>& ids,
                               const char* name) {
    for (size_t i = 0; i < set.size(); ++i) {
      gaussians.push_back({{"index", gaussians.size()},
                           {"set", name},
                           {"score", set[i].dynamic_score},
                           {"cluster_id", ids.empty() ? -1 : ids[i]}});
    }
  };
  add_entries(scene.static_gaussians, scene.static_cluster_ids, "static");
  add_entries(scene.dynamic_gaussians, scene.dynamic_cluster_ids, "dynamic");

  nlohmann::json summary;
  summary["static_count"] = scene.static_gaussians.size();
  summary["dynamic_count"] = scene.dynamic_gaussians.size();
  summary["has_deformation"] = scene.deform.has_value();
  summary["gaussians"] = std::move(gaussians);
  write_json_atomic((fs::path(a.out_dir) / "decomposition.json").string(), summary);

  if (!a.bundle_dir.empty()) {
    const ReferenceBundle bundle = ingest_bundle(a.bundle_dir);
    const size_t ns = scene.static_gaussians.size();
    RenderOptions opts;
    opts.background = scene.background;
    opts.payload = true;
    for (int f = 0; f < bundle.frame_count(); ++f) {
      const Frame& fr = bundle.frames[static_cast<size_t>(f)];
      // Score heat map: the composed snapshot already carries the scores.
      GaussianSnapshot snap = compose_scene_at_t(scene, fr.pose.timestamp_index);
      const RenderOutput scored = render(snap, fr.pose, opts);
      write_png(frame_file(a.out_dir, "score", f), to_u8_gray(scored.scalar));
      // Membership map: 1 for the dynamic block, thresholded after splatting.
      for (size_t i = 0; i < snap.payload.size(); ++i) snap.payload[i] = i < ns ? 0.0 : 1.0;
      const RenderOutput labeled = render(snap, fr.pose, opts);
      ImageU8 mask(labeled.scalar.height, labeled.scalar.width, 1);
      for (size_t i = 0; i < mask.data.size(); ++i) {
        mask.data[i] = labeled.scalar.data[i] > 0.5 ? 255 : 0;
      }
      write_png(frame_file(a.out_dir, "labels", f), mask);
    }
    log_line("report", "overlays for " + std::to_string(bundle.frame_count()) + " frames");
  }
  log_line("report", "written to " + a.out_dir);
  return 0;
}

int run_plan(const PlanArgs& a) {
  const HybridScene scene = load_scene(a.scene_path);
  nlohmann::json traj;
  try {
    traj = nlohmann::json::parse(read_text_file(a.trajectory_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("plan: invalid trajectory JSON: ") + e.what());
  }
  const std::vector<TrajectoryStep> steps = trajectory_from_json(traj);

  PlanConfig cfg;
  if (a.sweeps) cfg.sweeps = *a.sweeps;
  if (a.smoothness) cfg.smoothness_bound = *a.smoothness;

  const CollisionReport before = collision_cost(scene, steps, cfg.collision);
  const PlanResult result = optimize_trajectory(scene, steps, cfg);
  const CollisionReport after = collision_cost(scene, result.steps, cfg.collision);

  nlohmann::json out;
  out["initial_cost"] = result.initial_cost;
  out["final_cost"] = result.final_cost;
  out["accepted_moves"] = result.accepted_moves;
  out["offsets"] = result.offsets;
  out["per_step_before"] = before.per_step;
  out["per_step_after"] = after.per_step;
  out["trajectory"] = trajectory_to_json(result.steps);
  write_json_atomic(a.out_path, out);
  log_line("plan", "cost " + std::to_string(result.initial_cost) + " -> " +
                       std::to_string(result.final_cost) + " (" +
                       std::to_string(result.accepted_moves) + " moves)");

  if (!a.render_dir.empty()) {
    fs::create_directories(a.render_dir);
    const std::vector<ImageD> images = render_trajectory(scene, result.steps);
    for (size_t i = 0; i < images.size(); ++i) {
      write_png(frame_file(a.render_dir, "step", static_cast<int>(i)), quantize_u8(images[i]));
    }
    log_line("plan", "renders written to " + a.render_dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid static/dynamic Gaussian scene engine"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)")
      ->envname("HYBRIDSPLAT_THREADS");

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "render an analytic scene spec to a bundle");
  cmd_synth->add_option("--spec", synth.spec_path, "scene spec JSON")->required();
  cmd_synth->add_option("--out", synth.out_dir, "output bundle directory")->required();
  cmd_synth->add_option("--seed", synth.seed, "jitter seed");

  GenerateArgs gen;
  std::uint64_t gen_seed = 0;
  int gen_prepass = 0, gen_hybrid = 0, gen_score = 0, gen_pstride = 0, gen_fstride = 0;
  auto* cmd_gen = app.add_subcommand("generate", "fit a hybrid scene from a bundle");
  cmd_gen->add_option("--bundle", gen.bundle_dir, "input bundle directory")->required();
  cmd_gen->add_option("--out", gen.out_path, "output scene file")->required();
  cmd_gen->add_option("--config", gen.config_path, "pipeline config JSON");
  cmd_gen->add_option("--metrics", gen.metrics_path, "write per-stage metrics JSON here");
  cmd_gen->add_option("--holdout", gen.holdout, "frames excluded from fitting");
  auto* o_seed = cmd_gen->add_option("--seed", gen_seed, "run seed");
  auto* o_prepass = cmd_gen->add_option("--prepass-iters", gen_prepass, "");
  auto* o_hybrid = cmd_gen->add_option("--hybrid-iters", gen_hybrid, "");
  auto* o_score = cmd_gen->add_option("--score-iters", gen_score, "");
  auto* o_pstride = cmd_gen->add_option("--pixel-stride", gen_pstride, "");
  auto* o_fstride = cmd_gen->add_option("--frame-stride", gen_fstride, "");
  cmd_gen->add_flag("--force-all-dynamic", gen.force_all_dynamic,
                    "skip decomposition; every Gaussian is time-dependent");

  RenderArgs ren;
  auto* cmd_ren = app.add_subcommand("render", "render a scene file");
  cmd_ren->add_option("--scene", ren.scene_path, "scene file")->required();
  cmd_ren->add_option("--out", ren.out_dir, "output directory")->required();
  cmd_ren->add_option("--trajectory", ren.trajectory_path, "trajectory JSON");
  cmd_ren->add_option("--bundle", ren.bundle_dir, "render at this bundle's poses");
  cmd_ren->add_option("--frames", ren.frames, "bundle frame subset");

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "compare a scene against a bundle");
  cmd_eval->add_option("--scene", ev.scene_path, "scene file")->required();
  cmd_eval->add_option("--bundle", ev.bundle_dir, "reference bundle")->required();
  cmd_eval->add_option("--frames", ev.frames, "frame subset (default all)");
  cmd_eval->add_option("--out", ev.out_path, "report JSON path (default stdout)");

  ReportArgs rep;
  auto* cmd_rep = app.add_subcommand("decompose-report", "dump decomposition state");
  cmd_rep->add_option("--scene", rep.scene_path, "scene file")->required();
  cmd_rep->add_option("--out", rep.out_dir, "output directory")->required();
  cmd_rep->add_option("--bundle", rep.bundle_dir, "also write per-frame overlays");

  PlanArgs plan;
  int plan_sweeps = 0;
  double plan_smooth = 0;
  auto* cmd_plan = app.add_subcommand("plan", "adjust a trajectory to lower collision cost");
  cmd_plan->add_option("--scene", plan.scene_path, "scene file")->required();
  cmd_plan->add_option("--trajectory", plan.trajectory_path, "trajectory JSON")->required();
  cmd_plan->add_option("--out", plan.out_path, "plan JSON path")->required();
  cmd_plan->add_option("--render", plan.render_dir, "render the adjusted trajectory here");
  auto* o_sweeps = cmd_plan->add_option("--sweeps", plan_sweeps, "");
  auto* o_smooth = cmd_plan->add_option("--smoothness", plan_smooth, "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (threads > 0) set_threads(threads);
  if (o_seed->count()) gen.seed = gen_seed;
  if (o_prepass->count()) gen.prepass_iters = gen_prepass;
  if (o_hybrid->count()) gen.hybrid_iters = gen_hybrid;
  if (o_score->count()) gen.score_iters = gen_score;
  if (o_pstride->count()) gen.pixel_stride = gen_pstride;
  if (o_fstride->count()) gen.frame_stride = gen_fstride;
  if (o_sweeps->count()) plan.sweeps = plan_sweeps;
  if (o_smooth->count()) plan.smoothness = plan_smooth;

  try {
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_ren->parsed()) return run_render(ren);
    if (cmd_eval->parsed()) return run_eval(ev);
    if (cmd_rep->parsed()) return run_report(rep);
    if (cmd_plan->parsed()) return run_plan(plan);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
