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

// Acceptance run over the bundled fixtures: one PASS/FAIL line per criterion.
// Exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "taskforge/analysis/analysis.hpp"
#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/common/hash.hpp"
#include "taskforge/hollow/hollow.hpp"
#include "taskforge/mutation/mutation.hpp"
#include "taskforge/packaging/packaging.hpp"
#include "taskforge/patch/patch.hpp"
#include "taskforge/pipeline/pipeline.hpp"
#include "taskforge/sandbox/sandbox.hpp"
#include "taskforge/templates/template.hpp"
#include "taskforge/verify/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace taskforge;

namespace {

const fs::path kSource = TASKFORGE_SOURCE_DIR;
const fs::path kFixtures = kSource / "tests" / "fixtures";
const fs::path kPolyglot = kFixtures / "polyglot";
const fs::path kTemplates = kSource / "templates";

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

int g_failures = 0;

void criterion(int n, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.ok && secs >= limit_s) o.fail("over time limit");
  if (!o.ok) ++g_failures;
  char timing[64];
  std::snprintf(timing, sizeof timing, "%.2fs / %.0fs", secs, limit_s);
  std::cout << (o.ok ? "PASS" : "FAIL") << " [" << n << "] " << name << " (" << timing << ")";
  if (!o.detail.empty()) std::cout << ": " << o.detail;
  std::cout << std::endl;
}

const TemplateRegistry& registry() {
  static const TemplateRegistry reg = TemplateRegistry::load_dir(kTemplates);
  return reg;
}

const AnalysisReport& polyglot_report() {
  static const AnalysisReport report = analyze_repo(kPolyglot, registry());
  return report;
}

std::set<ModifierId> parse_guaranteed_modifiers() {
  std::set<ModifierId> out;
  for (ModifierId m : all_modifiers())
    if (parse_guaranteed(m)) out.insert(m);
  return out;
}

std::set<ModifierId> every_modifier() {
  return {all_modifiers().begin(), all_modifiers().end()};
}

std::string mutated_bytes(const fs::path& root, const Candidate& c) {
  return apply_edits(fsutil::read_file(root / c.edits.file_path), c.edits);
}

Patch candidate_patch(const fs::path& root, const Candidate& c, const std::string& snapshot) {
  return diff_overlay(root, {{c.edits.file_path, mutated_bytes(root, c)}}, snapshot);
}

SandboxSpec spec_for(const fs::path& root, const std::string& snapshot, const VerifierMeta& meta) {
  SandboxSpec s;
  s.substrate_ref = root.string();
  s.repo_snapshot = snapshot;
  return with_verifier_limits(s, meta);
}

// --- 1 -------------------------------------------------------------------

Outcome modifier_validity() {
  Outcome o;
  const auto& report = polyglot_report();
  std::set<std::string> languages;
  for (const auto& e : report.entities) languages.insert(e.language_id);
  if (languages.size() < 2 || report.entities.size() < 30)
    o.fail("fixture corpus too small: " + std::to_string(languages.size()) + " languages, " +
           std::to_string(report.entities.size()) + " entities");

  std::size_t total = 0;
  std::set<ModifierId> seen;
  for (std::uint64_t seed : {7ull, 11ull, 23ull}) {
    auto cs = enumerate_candidates(report, parse_guaranteed_modifiers(), registry(), seed,
                                   directory_reader(kPolyglot));
    for (const auto& c : cs) {
      ++total;
      seen.insert(c.spec.modifier);
      std::string out;
      try {
        out = mutated_bytes(kPolyglot, c);
      } catch (const Error& e) {
        o.fail(c.spec.candidate_id + " does not apply: " + e.what());
        continue;
      }
      auto lang = resolve_language(c.edits.file_path, registry());
      auto tree = parse_source(out, registry().require(*lang));
      if (tree.has_error()) o.fail(c.spec.candidate_id + " breaks the parse");
    }
  }
  if (total == 0) o.fail("no candidates");
  if (o.ok)
    o.detail = std::to_string(total) + " edit sets from " + std::to_string(seen.size()) +
               " modifiers, " + std::to_string(report.entities.size()) + " entities";
  return o;
}

// --- 2, 3 ----------------------------------------------------------------

struct RandomCase {
  OutcomeVector base, cand;
};

std::vector<RandomCase> random_cases(std::size_t n) {
  std::mt19937_64 rng(20261016);
  const TestStatus statuses[] = {TestStatus::pass, TestStatus::fail, TestStatus::error,
                                 TestStatus::skip};
  auto vec = [&] {
    OutcomeVector v;
    std::size_t size = rng() % 21;
    for (std::size_t k = 0; k < size; ++k)
      v.outcomes["t" + std::to_string(rng() % 24)] = statuses[rng() % 4];
    return v;
  };
  std::vector<RandomCase> out(n);
  for (auto& c : out) {
    c.base = vec();
    c.cand = vec();
  }
  return out;
}

// Set algebra over explicit membership lists, independent of the library.
TestPartition brute_force_partition(const OutcomeVector& base, const OutcomeVector& cand) {
  std::set<std::string> base_pass, base_bad, cand_pass, cand_skip, base_skip, in_cand;
  for (const auto& [t, s] : base.outcomes) {
    if (s == TestStatus::pass) base_pass.insert(t);
    if (s == TestStatus::fail || s == TestStatus::error) base_bad.insert(t);
    if (s == TestStatus::skip) base_skip.insert(t);
  }
  for (const auto& [t, s] : cand.outcomes) {
    in_cand.insert(t);
    if (s == TestStatus::pass) cand_pass.insert(t);
    if (s == TestStatus::skip) cand_skip.insert(t);
  }
  auto minus = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r, r.end()));
    return r;
  };
  auto both = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r, r.end()));
    return r;
  };
  TestPartition p;
  p.p2p = both(base_pass, cand_pass);
  p.p2f = minus(minus(base_pass, cand_pass), cand_skip);
  p.f2p = both(base_bad, cand_pass);
  p.f2f = minus(minus(base_bad, cand_pass), cand_skip);
  return p;
}

Outcome partition_equivalence(const std::vector<RandomCase>& cases) {
  Outcome o;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    TestPartition got = partition_outcomes(cases[i].base, cases[i].cand);
    TestPartition want = brute_force_partition(cases[i].base, cases[i].cand);
    if (!(got == want)) o.fail("mismatch at case " + std::to_string(i));
    if (!want.p2f.empty()) ++nonempty;
  }
  if (o.ok)
    o.detail = std::to_string(cases.size()) + " cases, " + std::to_string(nonempty) +
               " with a pass-to-fail test";
  return o;
}

Outcome acceptance_rule(const std::vector<RandomCase>& cases) {
  Outcome o;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    bool want = false;
    for (const auto& [t, s] : cases[i].base.outcomes) {
      if (s != TestStatus::pass) continue;
      auto it = cases[i].cand.outcomes.find(t);
      if (it == cases[i].cand.outcomes.end() || it->second == TestStatus::fail ||
          it->second == TestStatus::error)
        want = true;
    }
    bool got = accept_candidate(partition_outcomes(cases[i].base, cases[i].cand));
    if (got != want) o.fail("mismatch at case " + std::to_string(i));
    accepted += got;
  }
  if (o.ok) o.detail = std::to_string(accepted) + "/" + std::to_string(cases.size()) + " accepted";
  return o;
}

// --- 4 -------------------------------------------------------------------

Outcome patch_round_trips() {
  Outcome o;
  const auto& report = polyglot_report();
  std::vector<Candidate> pool;
  std::set<std::string> seen;
  for (std::uint64_t seed = 1; pool.size() < 200 && seed < 50; ++seed) {
    for (auto& c : enumerate_candidates(report, every_modifier(), registry(), seed,
                                        directory_reader(kPolyglot))) {
      std::string key = c.edits.file_path + "\n" + json(to_json(c)["edits"]).dump();
      if (pool.size() < 200 && seen.insert(key).second) pool.push_back(std::move(c));
    }
  }
  if (pool.size() < 200) o.fail("only " + std::to_string(pool.size()) + " distinct candidates");

  auto pristine = fsutil::manifest(kPolyglot);
  fsutil::TempDir tmp;
  fs::path work = tmp.path() / "work";
  fsutil::copy_tree(kPolyglot, work);

  for (const auto& c : pool) {
    const std::string& id = c.spec.candidate_id;
    std::string after = mutated_bytes(kPolyglot, c);
    auto expected = pristine;
    expected[c.edits.file_path] = sha256_hex(after);

    Patch patch = candidate_patch(kPolyglot, c, report.snapshot_id);
    apply_patch(work, patch);
    if (fsutil::manifest(work) != expected) o.fail(id + ": apply differs from the edit set");
    Patch redone = diff_snapshot(kPolyglot, work);
    revert_patch(work, patch);
    if (fsutil::manifest(work) != pristine) o.fail(id + ": revert is not byte-identical");

    apply_patch(work, redone);
    if (fsutil::manifest(work) != expected) o.fail(id + ": diff then apply differs");
    revert_patch(work, redone);
    if (fsutil::manifest(work) != pristine) o.fail(id + ": second revert differs");
  }
  if (o.ok) o.detail = std::to_string(pool.size()) + " candidates";
  return o;
}

// --- 5 -------------------------------------------------------------------

Outcome hollow_inverse() {
  Outcome o;
  const auto& report = polyglot_report();
  CoverageMap coverage = load_coverage(kPolyglot / "coverage.jsonl", report);
  auto scopes = mine_scope(coverage, report);
  if (scopes.empty()) o.fail("no scopes mined");

  VerifierMeta meta = load_verifier_meta(kPolyglot / "taskforge-verifier.yaml");
  SandboxSpec spec = spec_for(kPolyglot, report.snapshot_id, meta);
  SandboxPool sandboxes;
  auto pristine = fsutil::manifest(kPolyglot);

  for (std::size_t i = 0; i < scopes.size(); ++i) {
    std::string label = "scope " + std::to_string(i);
    HollowPlan plan = plan_hollow(scopes[i], report, registry(), directory_reader(kPolyglot));
    HollowPatches hp = emit_patches(kPolyglot, plan);

    fsutil::TempDir tmp;
    fs::path work = tmp.path() / "work";
    fsutil::copy_tree(kPolyglot, work);
    apply_patch(work, hp.hollow_patch);
    for (const auto& file : hp.hollow_patch.files) {
      auto lang = resolve_language(file, registry());
      if (!lang || parse_source(fsutil::read_file(work / file), registry().require(*lang)).has_error())
        o.fail(label + ": " + file + " does not re-parse after hollowing");
    }
    apply_patch(work, hp.golden_patch);
    if (fsutil::manifest(work) != pristine) o.fail(label + ": hollow then golden is not identity");
    if (!verify_solvability(sandboxes, spec, hp, scopes[i].mapped_tests, meta))
      o.fail(label + ": not solvable");
  }
  if (o.ok) o.detail = std::to_string(scopes.size()) + " scopes";
  return o;
}

// --- 6, 7 ----------------------------------------------------------------

PipelineConfig fixture_config(const fs::path& out, unsigned jobs) {
  PipelineConfig cfg;
  cfg.repo_path = kPolyglot;
  cfg.templates_dir = kTemplates;
  cfg.seed = 7;
  cfg.jobs = jobs;
  cfg.out_dir = out;
  return cfg;
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

std::set<std::string> accepted_ids(const fs::path& out) {
  std::set<std::string> ids;
  for (const auto& v : read_jsonl(out / artifacts::kVerified))
    if (v.value("accepted", false)) ids.insert(v.at("candidate_id").get<std::string>());
  return ids;
}

struct EndToEnd {
  std::set<std::string> accepted;
  std::map<std::string, std::vector<std::string>> p2f;  // task id -> p2f
};

EndToEnd run_end_to_end(const fs::path& out, unsigned jobs, bool package) {
  PipelineConfig cfg = fixture_config(out, jobs);
  for (Stage s : {Stage::analyze, Stage::forge, Stage::verify}) {
    StageResult r = run_pipeline(cfg, s);
    if (r.exit_code != 0)
      throw std::runtime_error(std::string(to_string(s)) + " exited " + std::to_string(r.exit_code));
  }
  EndToEnd e;
  e.accepted = accepted_ids(out);
  if (package) {
    StageResult r = run_pipeline(cfg, Stage::package);
    if (r.exit_code != 0) throw std::runtime_error("package exited " + std::to_string(r.exit_code));
    for (const auto& rec : read_records(out / artifacts::kTasks))
      e.p2f[rec.task_id()] = rec.validation.p2f;
  }
  return e;
}

Outcome replay_determinism() {
  Outcome o;
  fsutil::TempDir tmp;
  std::vector<EndToEnd> runs;
  for (int i = 0; i < 3; ++i)
    runs.push_back(run_end_to_end(tmp.path() / ("run" + std::to_string(i)), 1, true));
  if (runs[0].accepted.empty()) o.fail("no accepted candidates");
  for (int i = 1; i < 3; ++i) {
    if (runs[i].accepted != runs[0].accepted)
      o.fail("accepted set of run " + std::to_string(i) + " differs");
    if (runs[i].p2f != runs[0].p2f) o.fail("p2f sets of run " + std::to_string(i) + " differ");
  }
  if (o.ok)
    o.detail = std::to_string(runs[0].accepted.size()) + " accepted, " +
               std::to_string(runs[0].p2f.size()) + " records, 3 runs";
  return o;
}

// Each run drops a marker into its sandbox and hashes every file it can see.
// A run must see the pristine tree, its own patch and its own marker only.
Outcome sandbox_audit() {
  Outcome o;
  const auto& report = polyglot_report();
  auto cs = enumerate_candidates(report, every_modifier(), registry(), 7,
                                 directory_reader(kPolyglot));
  const std::size_t runs = 16;
  if (cs.size() < runs) {
    o.fail("not enough candidates");
    return o;
  }
  auto pristine = fsutil::manifest(kPolyglot);
  std::vector<Patch> patches;
  std::vector<std::map<std::string, std::string>> expected;
  for (std::size_t i = 0; i < runs; ++i) {
    const Candidate& c = cs[i * cs.size() / runs];
    patches.push_back(candidate_patch(kPolyglot, c, report.snapshot_id));
    auto m = pristine;
    m[c.edits.file_path] = sha256_hex(mutated_bytes(kPolyglot, c));
    std::string marker = ".marker-" + std::to_string(i);
    m[marker] = sha256_hex(std::to_string(i) + "\n");
    expected.push_back(std::move(m));
  }

  SandboxPool sandboxes({.max_size = 4});
  SandboxSpec spec;
  spec.substrate_ref = kPolyglot.string();
  spec.repo_snapshot = report.snapshot_id;
  std::vector<std::map<std::string, std::string>> seen(runs);
  std::vector<std::string> errors(runs);
  auto worker = [&](std::size_t first) {
    for (std::size_t i = first; i < runs; i += 4) {
      std::string script = "echo " + std::to_string(i) + " > .marker-" + std::to_string(i) +
                           " && sleep 0.2 && find . -type f ! -path './.taskforge/*' "
                           "-exec sha256sum {} +";
      try {
        ExecutionResult r = with_candidate(sandboxes, spec, &patches[i], {"sh", "-c", script});
        std::istringstream lines(r.stdout_text);
        for (std::string hash, path; lines >> hash >> path;) seen[i][path.substr(2)] = hash;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 4; ++t) threads.emplace_back(worker, t);
  for (auto& t : threads) t.join();

  for (std::size_t i = 0; i < runs; ++i) {
    if (!errors[i].empty()) o.fail("run " + std::to_string(i) + ": " + errors[i]);
    else if (seen[i] != expected[i]) o.fail("run " + std::to_string(i) + " saw a foreign tree");
  }
  if (sandboxes.stats().warm_reuses == 0) o.fail("no warm reuse exercised");
  return o;
}

Outcome parallel_statelessness() {
  Outcome o;
  fsutil::TempDir tmp;
  auto serial = run_end_to_end(tmp.path() / "jobs1", 1, false);
  auto parallel = run_end_to_end(tmp.path() / "jobs4", 4, false);
  if (serial.accepted.empty()) o.fail("no accepted candidates");
  if (serial.accepted != parallel.accepted) o.fail("accepted sets differ between jobs=1 and jobs=4");
  Outcome audit = sandbox_audit();
  if (!audit.ok) o.fail(audit.detail);
  if (o.ok)
    o.detail = std::to_string(serial.accepted.size()) + " accepted; 16 audited concurrent runs";
  return o;
}

// --- 8 -------------------------------------------------------------------

Outcome readiness_matrix() {
  Outcome o;
  using C = ReadinessReport::Classification;
  const std::vector<std::pair<std::string, C>> matrix = {
      {"clean_pass", C::ready},          {"failing_tests", C::ready},
      {"missing_dependency", C::env_failure}, {"missing_tool", C::env_failure},
      {"malformed_artifact", C::harness_failure}, {"timeout", C::harness_failure},
  };
  SandboxPool sandboxes;
  std::string got;
  for (const auto& [name, want] : matrix) {
    fs::path root = kFixtures / "readiness" / name;
    VerifierMeta meta = load_verifier_meta(root / "taskforge-verifier.yaml");
    ReadinessReport r =
        readiness_gate(sandboxes, spec_for(root, fsutil::tree_hash(root), meta), meta);
    if (r.classification != want)
      o.fail(name + " gave " + std::string(to_string(r.classification)) + " (" + r.evidence + ")");
    got += (got.empty() ? "" : ", ") + std::string(to_string(r.classification));
  }
  if (o.ok) o.detail = "{" + got + "}";
  return o;
}

// --- 9 -------------------------------------------------------------------

Outcome leakage_soundness() {
  Outcome o;
  fs::path dir = kFixtures / "leakage";
  json fp_doc = json::parse(fsutil::read_file(dir / "fingerprint.json"));
  CausalFingerprint fp;
  fp.files = fp_doc.at("files").get<std::set<std::string>>();
  fp.identifiers = fp_doc.at("identifiers").get<std::set<std::string>>();
  auto allowed = fp_doc.at("allowed_test_ids").get<std::vector<std::string>>();

  std::size_t leaky = 0, clean = 0, false_accepts = 0, false_rejects = 0;
  std::string first;
  for (const auto& v : read_jsonl(dir / "statements.jsonl")) {
    std::string text = v.at("statement").get<std::string>();
    bool is_leaky = v.at("leaky").get<bool>();
    (is_leaky ? leaky : clean)++;
    bool accepted = leakage_filter(text, fp, allowed).accepted;
    if (accepted == is_leaky) {
      (is_leaky ? false_accepts : false_rejects)++;
      if (first.empty()) first = text;
    }
  }
  if (leaky != 25 || clean != 25) o.fail("corpus is not 25 + 25");
  if (false_accepts || false_rejects)
    o.fail(std::to_string(false_accepts) + " false accepts, " + std::to_string(false_rejects) +
           " false rejects; first: " + first);
  if (o.ok) o.detail = "50 statements, 0 false accepts, 0 false rejects";
  return o;
}

// --- 10 ------------------------------------------------------------------

Outcome flaky_exclusion() {
  Outcome o;
  const std::string flaky_id = "tests/checks.py::test_flaky_clock";
  fs::path root = kFixtures / "flaky";
  AnalysisReport report = analyze_repo(root, registry());
  auto cs = enumerate_candidates(report, every_modifier(), registry(), 1, directory_reader(root));
  if (cs.empty()) {
    o.fail("no candidates on the flaky fixture");
    return o;
  }
  VerifierMeta meta = load_verifier_meta(root / "taskforge-verifier.yaml");
  SandboxSpec spec = spec_for(root, report.snapshot_id, meta);
  fsutil::TempDir state;
  fs::path counter = state.path() / "counter";
  spec.env_vars["FLAKY_STATE"] = counter.string();
  SandboxPool sandboxes;

  std::size_t accepted = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    fsutil::write_file(counter, std::to_string(rng() % 1000));
    std::string label = "seed " + std::to_string(seed);
    OutcomeVector base = run_baseline(sandboxes, spec, meta);
    const auto& flaky = base.run_meta.flaky;
    if (std::find(flaky.begin(), flaky.end(), flaky_id) == flaky.end())
      o.fail(label + ": not flagged flaky");
    if (base.outcomes.contains(flaky_id)) o.fail(label + ": kept in the baseline");

    const Candidate& c = cs[rng() % cs.size()];
    OutcomeVector cand =
        run_candidate(sandboxes, spec, candidate_patch(root, c, report.snapshot_id), meta);
    TestPartition p = partition_outcomes(base, cand);
    for (const auto* set : {&p.p2f, &p.p2p, &p.f2p, &p.f2f})
      if (set->contains(flaky_id)) o.fail(label + ": appears in a partition set");
    accepted += accept_candidate(p);
  }
  if (o.ok) o.detail = "20 runs, " + std::to_string(accepted) + " candidates accepted";
  return o;
}

}  // namespace

int main() {
  std::cout << "taskforge acceptance" << std::endl;
  criterion(1, "modifier validity", 30, modifier_validity);
  auto cases = random_cases(10000);
  criterion(2, "partition oracle equivalence", 10, [&] { return partition_equivalence(cases); });
  criterion(3, "acceptance rule", 1, [&] { return acceptance_rule(cases); });
  criterion(4, "patch round-trips", 60, patch_round_trips);
  criterion(5, "hollow/golden inverse", 60, hollow_inverse);
  criterion(6, "end-to-end replay determinism", 300, replay_determinism);
  criterion(7, "statelessness under parallelism", 300, parallel_statelessness);
  criterion(8, "readiness classification", 60, readiness_matrix);
  criterion(9, "leakage filter soundness", 5, leakage_soundness);
  criterion(10, "flaky exclusion", 60, flaky_exclusion);
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " failed")
            << std::endl;
  return g_failures;
}
