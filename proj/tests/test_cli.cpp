// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
//
// Process-level checks of the command-line tool: artifact layout, exit codes,
// and atomic output behavior.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hsplat/eval/planning.hpp"
#include "hsplat/oracle/oracle.hpp"
#include "fixtures.hpp"

using namespace hsplat;
namespace fs = std::filesystem;

namespace {

fs::path tool_binary() {
  if (const char* env = std::getenv("HYBRIDSPLAT_BIN")) return env;
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  REQUIRE(!ec);
  return self.parent_path().parent_path() / "tools" / "hybridsplat";
}

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun run_tool(const fs::path& workdir, const std::string& args) {
  const fs::path log = workdir / "cmd.log";
  const std::string cmd =
      tool_binary().string() + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  CliRun r;
  r.code = (rc == -1) ? -1 : WEXITSTATUS(rc);
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

struct TmpDir {
  fs::path path;
  TmpDir() {
    path = fs::temp_directory_path() / ("hsplat_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

bool no_tmp_leftovers(const fs::path& dir) {
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().extension() == ".tmp") return false;
  }
  return true;
}

nlohmann::json parse_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("the tool chains synth, generate, render, eval, report, and plan") {
  TmpDir tmp;
  const fs::path spec_path = tmp.path / "spec.json";
  const fs::path bundle = tmp.path / "bundle";
  const fs::path scene = tmp.path / "scene.hspl";
  const fs::path metrics = tmp.path / "metrics.json";

  write_text(spec_path, spec_to_json(fixtures::static_scene(4, 32, 24.0)));

  const CliRun synth = run_tool(tmp.path, "synth --spec " + spec_path.string() + " --out " +
                                              bundle.string() + " --seed 7");
  CHECK_MESSAGE(synth.code == 0, synth.output);
  CHECK(fs::exists(bundle / "poses.json"));
  CHECK(fs::exists(bundle / "meta.json"));
  CHECK(fs::exists(bundle / "frames" / "0000.png"));
  CHECK(fs::exists(bundle / "pointmaps" / "0003.pfm"));

  const CliRun gen = run_tool(
      tmp.path, "generate --bundle " + bundle.string() + " --out " + scene.string() +
                    " --metrics " + metrics.string() +
                    " --holdout 3 --seed 11 --prepass-iters 3 --hybrid-iters 3"
                    " --score-iters 3 --pixel-stride 2");
  CHECK_MESSAGE(gen.code == 0, gen.output);
  REQUIRE(fs::exists(scene));
  CHECK(no_tmp_leftovers(tmp.path));
  const nlohmann::json m = parse_file(metrics);
  CHECK(m.contains("init"));
  CHECK(m.contains("psnr_holdout"));
  CHECK(gen.output.find("[ingest] 4 frames") != std::string::npos);
  CHECK(gen.output.find("[save]") != std::string::npos);

  const fs::path renders = tmp.path / "renders";
  const CliRun ren = run_tool(tmp.path, "render --scene " + scene.string() + " --bundle " +
                                            bundle.string() + " --out " + renders.string() +
                                            " --frames 0 --frames 2");
  CHECK_MESSAGE(ren.code == 0, ren.output);
  CHECK(fs::exists(renders / "frame_0000.png"));
  CHECK(fs::exists(renders / "frame_0002.png"));
  CHECK(!fs::exists(renders / "frame_0001.png"));

  const fs::path eval_json = tmp.path / "eval.json";
  const CliRun ev = run_tool(tmp.path, "eval --scene " + scene.string() + " --bundle " +
                                           bundle.string() + " --out " + eval_json.string());
  CHECK_MESSAGE(ev.code == 0, ev.output);
  const nlohmann::json report = parse_file(eval_json);
  CHECK(report["frames"].size() == 4);
  CHECK(report["psnr_mean"].is_number());
  CHECK(report.contains("iou_mean"));

  const fs::path report_dir = tmp.path / "decomp";
  const CliRun rep = run_tool(tmp.path, "decompose-report --scene " + scene.string() +
                                            " --bundle " + bundle.string() + " --out " +
                                            report_dir.string());
  CHECK_MESSAGE(rep.code == 0, rep.output);
  const nlohmann::json decomp = parse_file(report_dir / "decomposition.json");
  CHECK(decomp["static_count"].get<int>() + decomp["dynamic_count"].get<int>() > 0);
  CHECK(fs::exists(report_dir / "score_0000.png"));
  CHECK(fs::exists(report_dir / "labels_0003.png"));

  // Plan over a straight push through the fitted scene.
  std::vector<TrajectoryStep> steps;
  for (int k = 0; k < 4; ++k) {
    TrajectoryStep s;
    s.pose = fixtures::camera_at({0, 0, 0.4 * k}, 32, 24.0, k);
    s.t = k;
    steps.push_back(s);
  }
  const fs::path traj_path = tmp.path / "traj.json";
  write_text(traj_path, trajectory_to_json(steps).dump());
  const fs::path plan_json = tmp.path / "plan.json";
  const CliRun plan = run_tool(tmp.path, "plan --scene " + scene.string() + " --trajectory " +
                                             traj_path.string() + " --out " + plan_json.string() +
                                             " --sweeps 1");
  CHECK_MESSAGE(plan.code == 0, plan.output);
  const nlohmann::json planned = parse_file(plan_json);
  CHECK(planned["final_cost"].get<double>() <= planned["initial_cost"].get<double>());
  CHECK(planned["offsets"].size() == 4);
  CHECK(planned["trajectory"]["steps"].size() == 4);

  const fs::path traj_renders = tmp.path / "traj_renders";
  const CliRun ren2 = run_tool(tmp.path, "render --scene " + scene.string() + " --trajectory " +
                                             traj_path.string() + " --out " +
                                             traj_renders.string());
  CHECK_MESSAGE(ren2.code == 0, ren2.output);
  CHECK(fs::exists(traj_renders / "step_0003.png"));
}

TEST_CASE("invalid input exits with code 2") {
  TmpDir tmp;
  const fs::path spec_path = tmp.path / "spec.json";
  const fs::path bundle = tmp.path / "bundle";
  write_text(spec_path, spec_to_json(fixtures::static_scene(2, 24, 18.0)));
  REQUIRE(run_tool(tmp.path, "synth --spec " + spec_path.string() + " --out " + bundle.string())
              .code == 0);

  SUBCASE("missing required argument") {
    CHECK(run_tool(tmp.path, "synth --spec " + spec_path.string()).code == 2);
  }

  SUBCASE("unknown subcommand") {
    CHECK(run_tool(tmp.path, "transmogrify").code == 2);
  }

  SUBCASE("nonexistent spec file") {
    const CliRun r = run_tool(tmp.path, "synth --spec " + (tmp.path / "nope.json").string() +
                                            " --out " + (tmp.path / "b2").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
  }

  SUBCASE("holding out every frame") {
    const CliRun r = run_tool(
        tmp.path, "generate --bundle " + bundle.string() + " --out " +
                      (tmp.path / "s.hspl").string() + " --holdout 0 --holdout 1" +
                      " --prepass-iters 1 --hybrid-iters 1 --score-iters 1");
    CHECK(r.code == 2);
    CHECK(r.output.find("every frame is held out") != std::string::npos);
  }

  SUBCASE("malformed pipeline config") {
    const fs::path cfg = tmp.path / "cfg.json";
    write_text(cfg, "{ not json");
    const CliRun r = run_tool(tmp.path, "generate --bundle " + bundle.string() + " --out " +
                                            (tmp.path / "s.hspl").string() + " --config " +
                                            cfg.string());
    CHECK(r.code == 2);
  }

  SUBCASE("config with an unknown field") {
    const fs::path cfg = tmp.path / "cfg.json";
    write_text(cfg, "{\"prepass_itres\": 5}");
    const CliRun r = run_tool(tmp.path, "generate --bundle " + bundle.string() + " --out " +
                                            (tmp.path / "s.hspl").string() + " --config " +
                                            cfg.string());
    CHECK(r.code == 2);
    CHECK(r.output.find("unknown field") != std::string::npos);
  }

  SUBCASE("corrupt scene file") {
    const fs::path scene = tmp.path / "garbage.hspl";
    write_text(scene, "this is not a scene container");
    const CliRun r = run_tool(tmp.path, "render --scene " + scene.string() + " --bundle " +
                                            bundle.string() + " --out " +
                                            (tmp.path / "r").string());
    CHECK(r.code == 2);
  }

  SUBCASE("render needs exactly one pose source") {
    const CliRun r = run_tool(tmp.path, "render --scene " + (tmp.path / "s.hspl").string() +
                                            " --out " + (tmp.path / "r").string());
    CHECK(r.code == 2);
  }
}
