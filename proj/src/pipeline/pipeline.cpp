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

#include "taskforge/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

#include "taskforge/analysis/analysis.hpp"
#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/common/hash.hpp"
#include "taskforge/hollow/hollow.hpp"
#include "taskforge/mutation/mutation.hpp"
#include "taskforge/packaging/packaging.hpp"
#include "taskforge/patch/patch.hpp"
#include "taskforge/verify/verify.hpp"

namespace taskforge {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::analyze: return "analyze";
    case Stage::gate: return "gate";
    case Stage::forge: return "forge";
    case Stage::verify: return "verify";
    case Stage::package: return "package";
    case Stage::hollow: return "hollow";
    case Stage::replay: return "replay";
  }
  return "analyze";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : {Stage::analyze, Stage::gate, Stage::forge, Stage::verify, Stage::package,
                   Stage::hollow, Stage::replay})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig c) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, path.string(), e.what());
  }
  if (!doc.IsMap()) throw Error(ErrorCode::ConfigError, path.string(), "not a mapping");
  fs::path dir = path.parent_path();
  auto resolve = [&](const YAML::Node& n) { return fs::path(n.as<std::string>()).is_absolute()
                                                     ? fs::path(n.as<std::string>())
                                                     : dir / n.as<std::string>(); };
  try {
    if (auto n = doc["repo"]) c.repo_path = resolve(n);
    if (auto n = doc["templates"]) c.templates_dir = resolve(n);
    if (auto n = doc["seed"]) c.seed = n.as<std::uint64_t>();
    if (auto n = doc["jobs"]) c.jobs = n.as<unsigned>();
    if (auto n = doc["modifiers"]) {
      c.modifiers.clear();
      for (const auto& m : n) {
        auto id = parse_modifier(m.as<std::string>());
        if (!id) throw Error(ErrorCode::ConfigError, "modifiers", "unknown modifier " + m.as<std::string>());
        c.modifiers.insert(*id);
      }
    }
    if (auto l = doc["limits"]) {
      if (auto n = l["cpu_time_limit"]) c.cpu_time_limit = n.as<double>();
      if (auto n = l["memory_limit"]) c.memory_limit = n.as<std::uint64_t>();
      if (auto n = l["wall_timeout"]) c.wall_timeout = n.as<double>();
    }
    if (auto n = doc["verifier"]) c.verifier = resolve(n);
    if (auto n = doc["out"]) c.out_dir = resolve(n);
    if (auto n = doc["work_root"]) c.work_root = resolve(n);
    if (auto n = doc["coverage"]) c.coverage = resolve(n);
    if (auto n = doc["min_entities"]) c.min_entities = n.as<std::size_t>();
    if (auto n = doc["min_isolation"]) c.min_isolation = n.as<double>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, path.string(), e.what());
  }
  return c;
}

void validate_config(const PipelineConfig& c, Stage stage) {
  if (c.repo_path.empty()) throw Error(ErrorCode::ConfigError, "repo", "not set");
  if (!fs::is_directory(c.repo_path))
    throw Error(ErrorCode::ConfigError, "repo", c.repo_path.string() + " is not a directory");
  if (c.jobs < 1) throw Error(ErrorCode::ConfigError, "jobs", "must be at least 1");
  if (c.min_isolation < 0.0 || c.min_isolation > 1.0)
    throw Error(ErrorCode::ConfigError, "min_isolation", "must lie in [0, 1]");
  if (stage != Stage::gate && stage != Stage::replay && !fs::is_directory(c.templates_dir))
    throw Error(ErrorCode::ConfigError, "templates", c.templates_dir.string() + " is not a directory");
  SandboxSpec probe;
  probe.substrate_ref = c.repo_path.string();
  probe.cpu_time_limit = c.cpu_time_limit;
  probe.memory_limit = c.memory_limit;
  probe.wall_timeout = c.wall_timeout;
  validate_spec(probe);
}

namespace {

struct Context {
  const PipelineConfig& config;
  fs::path repo;
  fs::path out;

  fs::path at(const char* name) const { return out / name; }
  fs::path verifier_path() const {
    return config.verifier.empty() ? repo / "taskforge-verifier.yaml" : config.verifier;
  }
  VerifierMeta verifier() const { return load_verifier_meta(verifier_path()); }
  TemplateRegistry registry() const { return TemplateRegistry::load_dir(config.templates_dir); }

  SandboxSpec spec(const std::string& snapshot) const {
    SandboxSpec s;
    s.substrate_ref = repo.string();
    s.repo_snapshot = snapshot;
    s.cpu_time_limit = config.cpu_time_limit;
    s.memory_limit = config.memory_limit;
    s.wall_timeout = config.wall_timeout;
    return s;
  }
  PoolOptions pool_options() const {
    PoolOptions o;
    o.max_size = config.jobs;
    if (!config.work_root.empty()) o.work_root = config.work_root;
    return o;
  }
};

void require(const fs::path& p, Stage producer) {
  if (!fs::exists(p)) throw Error(ErrorCode::MissingPrerequisite, std::string(to_string(producer)),
                                  p.string() + " not found");
}

void write_json(const fs::path& p, const ordered_json& j) {
  fsutil::write_file_atomic(p, j.dump(2) + "\n");
}

void write_lines(const fs::path& p, const std::vector<ordered_json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  fsutil::write_file_atomic(p, out);
}

std::vector<json> read_lines(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

// Fans indices 0..n-1 out to `jobs` threads; fn must not throw.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < std::min<std::size_t>(jobs, n); ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
}

AnalysisReport current_analysis(const Context& ctx) {
  fs::path p = ctx.at(artifacts::kAnalysis);
  require(p, Stage::analyze);
  AnalysisReport report = read_report(p);
  std::string now = fsutil::tree_hash(ctx.repo);
  if (report.snapshot_id != now)
    throw Error(ErrorCode::SnapshotMismatch, p.string(), "repository changed since analyze");
  return report;
}

void ensure_ready(SandboxPool& pool, const Context& ctx, const SandboxSpec& spec,
                  const VerifierMeta& meta) {
  ReadinessReport r = readiness_gate(pool, spec, meta, ctx.out / "logs" / "readiness");
  if (!r.ready())
    throw Error(ErrorCode::NotReady, ctx.repo.string(),
                std::string(to_string(r.classification)) + ": " + r.evidence);
}

ordered_json run_json(const ExecutionResult& r) {
  ordered_json j;
  j["exit_code"] = r.exit_code ? json(*r.exit_code) : json(nullptr);
  j["duration"] = r.duration;
  j["peak_memory"] = r.peak_memory;
  j["timed_out"] = r.timed_out;
  j["stdout_sha256"] = sha256_hex(r.stdout_text);
  j["stderr_sha256"] = sha256_hex(r.stderr_text);
  return j;
}

void write_logs(const fs::path& dir, const ExecutionResult& r, const OutcomeVector& v) {
  fs::create_directories(dir);
  fsutil::write_file_atomic(dir / "stdout.txt", r.stdout_text);
  fsutil::write_file_atomic(dir / "stderr.txt", r.stderr_text);
  fsutil::write_file_atomic(dir / "outcomes.json", to_json(v).dump(2) + "\n");
}

std::vector<std::string> as_vector(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

StageResult stage_analyze(const Context& ctx) {
  AnalysisReport report = analyze_repo(ctx.repo, ctx.registry());
  fs::path p = ctx.at(artifacts::kAnalysis);
  write_report(report, p);
  std::size_t non_test = std::count_if(report.entities.begin(), report.entities.end(),
                                       [](const EntityRecord& e) { return !e.is_test; });
  std::size_t parsed = std::count_if(report.file_status.begin(), report.file_status.end(),
                                     [](const auto& f) { return f.second == FileStatus::parsed; });
  StageResult r;
  r.artifacts = {p, meta_path_for(p)};
  r.summary = "entities " + std::to_string(report.entities.size()) + "\nnon-test entities " +
              std::to_string(non_test) + "\nparsed files " + std::to_string(parsed);
  return r;
}

StageResult stage_gate(const Context& ctx) {
  VerifierMeta meta = ctx.verifier();
  SandboxPool pool(ctx.pool_options());
  ReadinessReport rep = readiness_gate(pool, ctx.spec(fsutil::tree_hash(ctx.repo)), meta,
                                       ctx.out / "logs" / "readiness");
  ordered_json j;
  j["classification"] = to_string(rep.classification);
  j["evidence"] = rep.evidence;
  j["artifact_valid"] = rep.artifact_valid;
  fs::path p = ctx.at(artifacts::kReadiness);
  write_json(p, j);
  return {0, {p}, "readiness " + std::string(to_string(rep.classification))};
}

StageResult stage_forge(const Context& ctx) {
  AnalysisReport report = current_analysis(ctx);
  TemplateRegistry registry = ctx.registry();
  std::set<ModifierId> mods = ctx.config.modifiers;
  if (mods.empty()) mods.insert(all_modifiers().begin(), all_modifiers().end());
  ProceduralSource source(registry, mods, ctx.config.seed, directory_reader(ctx.repo));
  std::vector<Candidate> cs = source.candidates(report);
  fs::path p = ctx.at(artifacts::kCandidates);
  write_candidates(cs, p);
  return {0, {p}, "candidates " + std::to_string(cs.size())};
}

StageResult stage_verify(const Context& ctx) {
  fs::path in = ctx.at(artifacts::kCandidates);
  require(in, Stage::forge);
  AnalysisReport report = current_analysis(ctx);
  std::vector<Candidate> cs = read_candidates(in);
  VerifierMeta meta = ctx.verifier();
  SandboxSpec spec = ctx.spec(report.snapshot_id);
  SandboxPool pool(ctx.pool_options());
  ensure_ready(pool, ctx, spec, meta);
  OutcomeVector base = run_baseline(pool, spec, meta);
  fs::path base_path = ctx.at(artifacts::kBaseline);
  write_json(base_path, ordered_json::parse(to_json(base).dump()));

  FileReader read = directory_reader(ctx.repo);
  std::vector<ordered_json> lines(cs.size());
  std::atomic<std::size_t> accepted{0}, failed{0};
  parallel_for(cs.size(), ctx.config.jobs, [&](std::size_t i) {
    const Candidate& c = cs[i];
    ordered_json j;
    j["candidate_id"] = c.spec.candidate_id;
    j["modifier"] = to_string(c.spec.modifier);
    j["target"] = c.spec.target;
    j["seed"] = c.spec.seed;
    try {
      if (c.spec.snapshot_id != report.snapshot_id)
        throw Error(ErrorCode::SnapshotMismatch, c.spec.candidate_id);
      std::string mutated = apply_edits(read(c.edits.file_path), c.edits);
      Patch patch = diff_overlay(ctx.repo, {{c.edits.file_path, mutated}}, report.snapshot_id);
      ExecutionResult raw;
      OutcomeVector v = run_candidate(pool, spec, patch, meta, &raw);
      TestPartition part = partition_outcomes(base, v);
      bool ok = accept_candidate(part);
      if (ok) ++accepted;
      std::map<std::string, std::string> messages;
      try {
        for (auto& o : collect_outcomes(raw, meta))
          if (part.p2f.contains(o.test_id)) messages[o.test_id] = o.message;
      } catch (const Error&) {
      }
      j["accepted"] = ok;
      j["patch"] = {{"base_snapshot", patch.base_snapshot}, {"diff_text", patch.diff_text}};
      j["partition"] = {{"p2f", as_vector(part.p2f)},
                        {"p2p", as_vector(part.p2p)},
                        {"f2p", as_vector(part.f2p)},
                        {"f2f", as_vector(part.f2f)}};
      j["messages"] = messages;
      j["run"] = run_json(raw);
      write_logs(ctx.out / "logs" / c.spec.candidate_id, raw, v);
    } catch (const Error& e) {
      ++failed;
      j["accepted"] = false;
      j["error"] = e.what();
    }
    lines[i] = std::move(j);
  });
  fs::path out = ctx.at(artifacts::kVerified);
  write_lines(out, lines);
  StageResult r;
  r.exit_code = failed ? 2 : 0;
  r.artifacts = {base_path, out};
  r.summary = "baseline tests " + std::to_string(base.outcomes.size()) + " (flaky " +
              std::to_string(base.run_meta.flaky.size()) + ")\ncandidates " +
              std::to_string(cs.size()) + "\naccepted " + std::to_string(accepted.load()) +
              "\nerrors " + std::to_string(failed.load());
  return r;
}

OutcomeVector read_baseline(const Context& ctx) {
  fs::path p = ctx.at(artifacts::kBaseline);
  require(p, Stage::verify);
  return outcome_vector_from_json(json::parse(fsutil::read_file(p)));
}

StageResult stage_package(const Context& ctx) {
  fs::path in = ctx.config.package_in.empty() ? ctx.at(artifacts::kVerified) : ctx.config.package_in;
  fs::path out = ctx.config.package_out.empty() ? ctx.at(artifacts::kTasks) : ctx.config.package_out;
  require(in, Stage::verify);
  OutcomeVector base = read_baseline(ctx);
  TemplateRegistry registry = ctx.registry();
  std::string snapshot = fsutil::tree_hash(ctx.repo);
  RepoSpec repo{ctx.repo.string(), snapshot};
  SandboxPool pool(ctx.pool_options());

  std::vector<TaskRecord> records;
  ordered_json report = ordered_json::array();
  std::size_t invalid = 0, leaky = 0;
  for (const json& v : read_lines(in)) {
    if (!v.value("accepted", false)) continue;
    std::string cid = v.at("candidate_id").get<std::string>();
    ordered_json entry;
    entry["candidate_id"] = cid;
    try {
      Patch patch = make_patch(v.at("patch").at("diff_text").get<std::string>(),
                               v.at("patch").at("base_snapshot").get<std::string>());
      if (patch.base_snapshot != snapshot)
        throw Error(ErrorCode::SnapshotMismatch, cid, "repository changed since verify");
      TestPartition part;
      const json& pj = v.at("partition");
      for (auto [key, set] : {std::pair{"p2f", &part.p2f}, std::pair{"p2p", &part.p2p},
                              std::pair{"f2p", &part.f2p}, std::pair{"f2f", &part.f2f}})
        for (const auto& t : pj.at(key)) set->insert(t.get<std::string>());
      std::vector<TestOutcome> failing;
      json messages = v.value("messages", json::object());
      for (const auto& [id, msg] : messages.items())
        failing.push_back({id, TestStatus::fail, 0.0, msg.get<std::string>()});
      CausalFingerprint fp = extract_identifiers(patch, ctx.repo, registry);
      ProblemStatement statement = render_problem_statement(part, failing, fp);
      LeakageVerdict verdict = leakage_filter(statement.text, fp, as_vector(part.p2f));
      if (!verdict.accepted) {
        ++leaky;
        entry["status"] = "leakage";
        for (const auto& viol : verdict.violations)
          entry["violations"].push_back({{"kind", viol.kind}, {"excerpt", viol.excerpt}});
        report.push_back(entry);
        continue;
      }
      Patch oracle = reversed(patch, post_state_hash(ctx.repo, patch));
      ordered_json meta;
      meta["task_id"] = "swe_scale-" + cid;
      meta["candidate_id"] = cid;
      meta["modifier"] = v.at("modifier");
      meta["target"] = v.at("target");
      meta["seed"] = v.at("seed");
      meta["baseline"] = {{"exit_code", base.run_meta.exit_code ? json(*base.run_meta.exit_code) : json(nullptr)},
                          {"duration", base.run_meta.duration},
                          {"flaky", base.run_meta.flaky}};
      meta["candidate_run"] = v.at("run");
      meta["fingerprint"] = {{"files", fp.files}, {"identifiers", fp.identifiers}};
      TaskRecord rec = build_record(TaskFamily::swe_scale, repo, patch, statement, oracle,
                                    {as_vector(part.p2f), as_vector(part.p2p), {}}, meta);
      std::vector<std::string> issues = validate_record(rec, pool, base);
      if (!issues.empty()) {
        ++invalid;
        entry["status"] = "invalid";
        entry["issues"] = issues;
        report.push_back(entry);
        continue;
      }
      entry["status"] = "published";
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      ++invalid;
      entry["status"] = "invalid";
      entry["issues"] = {e.what()};
    }
    report.push_back(entry);
  }
  write_records(records, out);
  fs::path rp = ctx.at(artifacts::kPackageReport);
  write_json(rp, report);
  StageResult r;
  r.exit_code = invalid ? 1 : 0;
  r.artifacts = {out, rp};
  r.summary = "published " + std::to_string(records.size()) + "\nleakage rejects " +
              std::to_string(leaky) + "\ninvalid " + std::to_string(invalid);
  return r;
}

StageResult stage_hollow(const Context& ctx) {
  AnalysisReport report = current_analysis(ctx);
  fs::path cov_path = ctx.config.coverage.empty() ? ctx.repo / "coverage.jsonl" : ctx.config.coverage;
  if (!fs::exists(cov_path)) throw Error(ErrorCode::ConfigError, "coverage", cov_path.string() + " not found");
  TemplateRegistry registry = ctx.registry();
  CoverageMap cov = load_coverage(cov_path, report);
  std::vector<ScopePackage> scopes =
      mine_scope(cov, report, {ctx.config.min_entities, ctx.config.min_isolation});

  VerifierMeta meta = ctx.verifier();
  SandboxSpec spec = ctx.spec(report.snapshot_id);
  SandboxPool pool(ctx.pool_options());
  ensure_ready(pool, ctx, spec, meta);
  OutcomeVector base = run_baseline(pool, spec, meta);
  RepoSpec repo{ctx.repo.string(), report.snapshot_id};

  std::vector<TaskRecord> records;
  ordered_json scope_report = ordered_json::array();
  for (std::size_t i = 0; i < scopes.size(); ++i) {
    const ScopePackage& s = scopes[i];
    ordered_json sj;
    sj["scope"] = i;
    sj["target_entities"] = s.target_entities;
    sj["mapped_tests"] = s.mapped_tests;
    sj["cohesion"] = s.cohesion;
    sj["isolation"] = s.isolation;
    try {
      HollowPlan plan = plan_hollow(s, report, registry, directory_reader(ctx.repo));
      HollowPatches hp = emit_patches(ctx.repo, plan);
      bool solvable = verify_solvability(pool, spec, hp, s.mapped_tests, meta);
      sj["solvable"] = solvable;
      if (!solvable) {
        scope_report.push_back(sj);
        continue;
      }
      std::string text = "Implement the missing bodies of these entities:\n";
      for (const auto& id : s.target_entities) text += "- " + id.substr(0, id.rfind('@')) + "\n";
      ordered_json md;
      md["task_id"] = "swe_architect-" + hp.hollow_patch.patch_id.substr(0, 12);
      md["scope"] = sj;
      TaskRecord rec = build_record(TaskFamily::swe_architect, repo, hp.hollow_patch,
                                    {text, "template"}, hp.golden_patch, {{}, {}, s.mapped_tests}, md);
      std::vector<std::string> issues = validate_record(rec, pool, base);
      sj["issues"] = issues;
      if (issues.empty()) records.push_back(std::move(rec));
    } catch (const Error& e) {
      sj["error"] = e.what();
    }
    scope_report.push_back(sj);
  }
  fs::path sp = ctx.at(artifacts::kScopes);
  fs::path tp = ctx.at(artifacts::kArchitectTasks);
  write_json(sp, scope_report);
  write_records(records, tp);
  return {0, {sp, tp},
          "scopes " + std::to_string(scopes.size()) + "\npublished " + std::to_string(records.size())};
}

StageResult stage_replay(const Context& ctx) {
  fs::path in = ctx.config.replay_in.empty() ? ctx.at(artifacts::kTasks) : ctx.config.replay_in;
  require(in, Stage::package);
  std::vector<TaskRecord> records = read_records(in);
  VerifierMeta meta = ctx.verifier();
  std::string snapshot = fsutil::tree_hash(ctx.repo);
  SandboxSpec spec = ctx.spec(snapshot);
  SandboxPool pool(ctx.pool_options());
  OutcomeVector base = run_baseline(pool, spec, meta);
  std::vector<ordered_json> lines(records.size());
  std::atomic<std::size_t> reproduced{0};
  parallel_for(records.size(), ctx.config.jobs, [&](std::size_t i) {
    const TaskRecord& rec = records[i];
    ordered_json j;
    j["task_id"] = rec.task_id();
    try {
      if (rec.repo.snapshot != snapshot)
        throw Error(ErrorCode::SnapshotMismatch, rec.task_id(), "record is for another snapshot");
      ReplayReport rep = replay_record(rec, pool, spec, meta, base);
      j["bug_reproduced"] = rep.bug_reproduced;
      j["oracle_restores"] = rep.oracle_restores;
      if (rep.bug_reproduced && rep.oracle_restores) ++reproduced;
    } catch (const Error& e) {
      j["error"] = e.what();
    }
    lines[i] = std::move(j);
  });
  fs::path out = ctx.at(artifacts::kReplay);
  write_lines(out, lines);
  return {0, {out},
          "records " + std::to_string(records.size()) + "\nreproduced " + std::to_string(reproduced.load())};
}

}  // namespace

StageResult run_pipeline(const PipelineConfig& config, Stage stage) {
  validate_config(config, stage);
  Context ctx{config, fs::absolute(config.repo_path).lexically_normal(), config.out_dir};
  if (ctx.repo.has_filename() == false) ctx.repo = ctx.repo.parent_path();
  fs::create_directories(ctx.out);
  switch (stage) {
    case Stage::analyze: return stage_analyze(ctx);
    case Stage::gate: return stage_gate(ctx);
    case Stage::forge: return stage_forge(ctx);
    case Stage::verify: return stage_verify(ctx);
    case Stage::package: return stage_package(ctx);
    case Stage::hollow: return stage_hollow(ctx);
    case Stage::replay: return stage_replay(ctx);
  }
  return {};
}

}  // namespace taskforge
