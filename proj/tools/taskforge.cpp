// Copyright 2026 The Taskforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// taskforge command line: one subcommand per pipeline stage.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "taskforge/common/error.hpp"
#include "taskforge/pipeline/pipeline.hpp"

namespace {

using namespace taskforge;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::MissingPrerequisite: return 3;
    case ErrorCode::NotReady: return 4;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic task-data factory for code repositories"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, repo = ".", templates, out, verifier, work_root;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double cpu_limit = 0, wall_timeout = 0;
  std::uint64_t memory_limit = 0;
  app.add_option("--config", config_file, "YAML config; flags override it");
  auto* o_repo = app.add_option("--repo", repo, "Repository (substrate) directory");
  auto* o_templates = app.add_option("--templates", templates, "Language template directory");
  auto* o_seed = app.add_option("--seed", seed, "Root seed");
  auto* o_jobs = app.add_option("--jobs", jobs, "Parallel sandboxes")->check(CLI::PositiveNumber);
  auto* o_out = app.add_option("--out", out, "Output directory");
  auto* o_verifier = app.add_option("--verifier", verifier, "Verifier metadata file");
  auto* o_work = app.add_option("--work-root", work_root, "Parent directory for sandboxes");
  auto* o_cpu = app.add_option("--cpu-limit", cpu_limit, "CPU seconds per run");
  auto* o_mem = app.add_option("--memory-limit", memory_limit, "Address-space bytes per run");
  auto* o_wall = app.add_option("--wall-timeout", wall_timeout, "Wall-clock seconds per run");

  std::map<std::string, Stage> stage_of;
  auto add = [&](Stage st, const char* help) {
    auto* sub = app.add_subcommand(std::string(to_string(st)), help);
    stage_of[sub->get_name()] = st;
    return sub;
  };
  add(Stage::analyze, "Extract entities and complexity signals");
  add(Stage::gate, "Classify the verifier's readiness");
  auto* forge = add(Stage::forge, "Enumerate mutation candidates");
  std::vector<std::string> modifiers;
  auto* o_mods = forge->add_option("--modifiers", modifiers, "Modifier subset")->delimiter(',');
  add(Stage::verify, "Run candidates and partition test outcomes");
  auto* package = add(Stage::package, "Build, filter and validate task records");
  std::string pkg_in, pkg_out;
  package->add_option("--in", pkg_in, "Verified candidates (default: <out>/candidates-verified.jsonl)");
  package->add_option("--out", pkg_out, "Task archive (default: <out>/tasks.jsonl)");
  auto* hollow = add(Stage::hollow, "Mine scopes and emit construction tasks");
  std::string coverage;
  std::size_t min_entities = 3;
  double min_isolation = 0.8;
  auto* o_cov = hollow->add_option("--coverage", coverage, "Coverage map (default: <repo>/coverage.jsonl)");
  auto* o_min_e = hollow->add_option("--min-entities", min_entities, "Smallest scope kept");
  auto* o_min_i = hollow->add_option("--min-isolation", min_isolation, "Lowest isolation kept")
                      ->check(CLI::Range(0.0, 1.0));
  auto* replay = add(Stage::replay, "Replay task records and check reproduction");
  std::string replay_in;
  replay->add_option("--in", replay_in, "Task archive (default: <out>/tasks.jsonl)");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg;
    if (!config_file.empty()) cfg = load_config(config_file, cfg);
    if (o_repo->count() || cfg.repo_path.empty()) cfg.repo_path = repo;
    if (o_templates->count()) cfg.templates_dir = templates;
    if (o_seed->count()) cfg.seed = seed;
    if (o_jobs->count()) cfg.jobs = jobs;
    if (o_out->count()) cfg.out_dir = out;
    if (o_verifier->count()) cfg.verifier = verifier;
    if (o_work->count()) cfg.work_root = work_root;
    if (o_cpu->count()) cfg.cpu_time_limit = cpu_limit;
    if (o_mem->count()) cfg.memory_limit = memory_limit;
    if (o_wall->count()) cfg.wall_timeout = wall_timeout;
    if (o_mods->count()) {
      cfg.modifiers.clear();
      for (const auto& m : modifiers) {
        auto id = parse_modifier(m);
        if (!id) throw Error(ErrorCode::ConfigError, "modifiers", "unknown modifier " + m);
        cfg.modifiers.insert(*id);
      }
    }
    cfg.package_in = pkg_in;
    cfg.package_out = pkg_out;
    if (o_cov->count()) cfg.coverage = coverage;
    if (o_min_e->count()) cfg.min_entities = min_entities;
    if (o_min_i->count()) cfg.min_isolation = min_isolation;
    cfg.replay_in = replay_in;

    Stage stage = stage_of.at(app.get_subcommands().front()->get_name());
    StageResult r = run_pipeline(cfg, stage);
    std::cout << r.summary << "\n";
    for (const auto& p : r.artifacts) std::cout << "wrote " << p.string() << "\n";
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "taskforge: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "taskforge: " << e.what() << "\n";
    return 1;
  }
}
