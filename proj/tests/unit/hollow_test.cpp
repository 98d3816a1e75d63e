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

#include <gtest/gtest.h>

#include <algorithm>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/hollow/hollow.hpp"

using namespace taskforge;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TASKFORGE_SOURCE_DIR;
const fs::path kPolyglot = kSource / "tests" / "fixtures" / "polyglot";

const TemplateRegistry& reg() {
  static const TemplateRegistry r = TemplateRegistry::load_dir(kSource / "templates");
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

EntityRecord entity(const std::string& id, bool is_test) {
  EntityRecord e;
  e.entity_id = id;
  e.is_test = is_test;
  e.file_path = id.substr(0, id.find("::"));
  e.name = id.substr(id.find("::") + 2);
  return e;
}

AnalysisReport toy_report(const std::vector<std::string>& code, const std::vector<std::string>& test_code) {
  AnalysisReport r;
  r.snapshot_id = "toy";
  for (const auto& id : code) r.entities.push_back(entity(id, false));
  for (const auto& id : test_code) r.entities.push_back(entity(id, true));
  return r;
}

using Edge = std::pair<std::string, std::string>;  // test, entity

// Components found by enumerating every node subset and keeping the ones
// that are connected and have no edge crossing their boundary.
std::vector<ScopePackage> brute_force_scopes(const std::vector<std::string>& tests,
                                             const std::vector<std::string>& code,
                                             const std::vector<Edge>& edges,
                                             const std::set<std::string>& test_entities) {
  std::vector<std::string> nodes = tests;
  nodes.insert(nodes.end(), code.begin(), code.end());
  const std::size_t n = nodes.size();
  auto idx = [&](const std::string& s) { return std::find(nodes.begin(), nodes.end(), s) - nodes.begin(); };
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n));
  for (const auto& [t, e] : edges)
    if (!test_entities.contains(e)) adj[idx(t)][idx(e)] = adj[idx(e)][idx(t)] = true;

  std::vector<ScopePackage> out;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    auto in = [&](std::size_t i) { return (mask >> i) & 1u; };
    bool closed = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (adj[i][j] && in(i) && !in(j)) closed = false;
    if (!closed) continue;
    unsigned reached = mask & -mask;
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (((reached >> i) & 1u) && adj[i][j] && in(j) && !((reached >> j) & 1u)) {
            reached |= 1u << j;
            grew = true;
          }
    }
    if (reached != mask) continue;

    ScopePackage p;
    for (std::size_t i = 0; i < n; ++i)
      if (in(i)) (i < tests.size() ? p.mapped_tests : p.target_entities).push_back(nodes[i]);
    if (p.target_entities.empty()) continue;
    double internal = 0, leaving = 0;
    for (const auto& [t, e] : edges)
      if (std::find(p.mapped_tests.begin(), p.mapped_tests.end(), t) != p.mapped_tests.end())
        (test_entities.contains(e) ? leaving : internal) += 1;
    p.cohesion = internal / double(p.mapped_tests.size() * p.target_entities.size());
    p.isolation = 1.0 - leaving / (internal + leaving);
    std::sort(p.mapped_tests.begin(), p.mapped_tests.end());
    std::sort(p.target_entities.begin(), p.target_entities.end());
    out.push_back(p);
  }
  return out;
}

CoverageMap coverage_of(const std::vector<Edge>& edges) {
  CoverageMap c;
  for (const auto& [t, e] : edges) c.edges[t].insert(e);
  return c;
}

bool by_first_entity(const ScopePackage& a, const ScopePackage& b) {
  return a.target_entities.front() < b.target_entities.front();
}

const char* kModule =
    "import math\n"
    "\n"
    "\n"
    "def area(r):\n"
    "    x = r * r\n"
    "    y = x * math.pi\n"
    "    z = y + 0\n"
    "    w = z\n"
    "    return w\n"
    "\n"
    "\n"
    "class Shape:\n"
    "    sides = 3\n"
    "\n"
    "    def __init__(self, n):\n"
    "        self.n = n\n"
    "\n"
    "    def count(self):\n"
    "        return self.n * 2\n";

struct ToyRepo {
  fsutil::TempDir tmp;
  fs::path root = tmp.path() / "repo";
  AnalysisReport report;

  ToyRepo() {
    fsutil::write_file(root / "src" / "geo.py", kModule);
    fsutil::write_file(root / "src" / "other.py", "def untouched():\n    return 0\n");
    report = analyze_repo(root, reg());
  }
  std::string id_of(const std::string& qualified) const {
    for (const auto& e : report.entities)
      if (e.qualified_name == qualified) return e.entity_id;
    throw std::runtime_error("no entity " + qualified);
  }
  HollowPlan plan(std::vector<std::string> targets) const {
    ScopePackage s;
    for (const auto& t : targets) s.target_entities.push_back(id_of(t));
    std::sort(s.target_entities.begin(), s.target_entities.end());
    return plan_hollow(s, report, reg(), directory_reader(root));
  }
  std::string hollowed(const HollowPlan& plan, const std::string& file = "src/geo.py") const {
    fs::path work = tmp.path() / "work";
    fs::remove_all(work);
    fsutil::copy_tree(root, work);
    apply_patch(work, emit_patches(root, plan).hollow_patch);
    return fsutil::read_file(work / file);
  }
};

}  // namespace

TEST(MineScope, ToyGraphMatchesBruteForce) {
  const std::vector<std::string> tests = {"tests/t.py::t1", "tests/t.py::t2", "tests/t.py::t3"};
  const std::vector<std::string> code = {"src/m.py::a", "src/m.py::b", "src/n.py::c"};
  const std::vector<Edge> edges = {{tests[0], code[0]}, {tests[1], code[0]}, {tests[1], code[1]},
                                   {tests[2], code[2]}, {tests[2], "tests/t.py::helper"}};
  AnalysisReport report = toy_report(code, {"tests/t.py::helper"});
  auto got = mine_scope(coverage_of(edges), report, {.min_entities = 1, .min_isolation = 0.0});
  auto want = brute_force_scopes(tests, code, edges, {"tests/t.py::helper"});
  ASSERT_EQ(want.size(), 2u);
  std::sort(got.begin(), got.end(), by_first_entity);
  std::sort(want.begin(), want.end(), by_first_entity);
  EXPECT_EQ(got, want);
}

TEST(MineScope, DisjointComponents) {
  AnalysisReport report = toy_report({"m::a", "m::b"}, {});
  auto got = mine_scope(coverage_of({{"t::x", "m::a"}, {"t::y", "m::b"}}), report,
                        {.min_entities = 1, .min_isolation = 0.0});
  ASSERT_EQ(got.size(), 2u);
  for (const auto& p : got) EXPECT_EQ(p.isolation, 1.0);
}

TEST(MineScope, OnlyTestFileEntityCovered) {
  AnalysisReport report = toy_report({}, {"tests/t.py::helper"});
  EXPECT_TRUE(mine_scope(coverage_of({{"tests/t.py::t1", "tests/t.py::helper"}}), report,
                         {.min_entities = 0, .min_isolation = 0.0})
                  .empty());
}

TEST(MineScope, ThresholdsFilter) {
  AnalysisReport report = toy_report({"m::a", "m::b", "m::c"}, {"t::h"});
  CoverageMap cov = coverage_of({{"t::x", "m::a"}, {"t::x", "m::b"}, {"t::x", "m::c"}, {"t::x", "t::h"}});
  EXPECT_EQ(mine_scope(cov, report, {.min_entities = 3, .min_isolation = 0.75}).size(), 1u);
  EXPECT_TRUE(mine_scope(cov, report, {.min_entities = 3, .min_isolation = 0.8}).empty());
  EXPECT_TRUE(mine_scope(cov, report, {.min_entities = 4, .min_isolation = 0.0}).empty());
}

TEST(MineScope, DanglingEntity) {
  AnalysisReport report = toy_report({"m::a"}, {});
  EXPECT_EQ(code_of([&] { mine_scope(coverage_of({{"t::x", "m::ghost"}}), report); }),
            ErrorCode::DanglingEntityId);
}

TEST(ParseCoverage, ShortIdsResolve) {
  ToyRepo repo;
  CoverageMap c = parse_coverage("{\"test\": \"tests/t.py::test_area\", \"covers\": [\"src/geo.py::area\"]}\n",
                                 repo.report);
  EXPECT_EQ(c.edges.at("tests/t.py::test_area"), std::set<std::string>{repo.id_of("area")});
  EXPECT_EQ(code_of([&] { parse_coverage("{\"test\": \"t\", \"covers\": []}\n", repo.report); }),
            ErrorCode::SchemaViolation);
}

TEST(PlanHollow, FunctionBodyBecomesOneStubLine) {
  ToyRepo repo;
  HollowPlan plan = repo.plan({"area"});
  ASSERT_EQ(plan.entries.size(), 1u);
  std::string out = repo.hollowed(plan);
  EXPECT_NE(out.find("def area(r):\n    raise NotImplementedError\n"), std::string::npos) << out;
  EXPECT_EQ(out.find("x = r * r"), std::string::npos);
}

TEST(PlanHollow, ClassTargetKeepsDeclarations) {
  ToyRepo repo;
  HollowPlan plan = repo.plan({"Shape"});
  EXPECT_EQ(plan.entries.size(), 2u);
  std::string out = repo.hollowed(plan);
  EXPECT_NE(out.find("class Shape:\n    sides = 3\n"), std::string::npos);
  EXPECT_NE(out.find("    def __init__(self, n):\n        raise NotImplementedError\n"), std::string::npos);
  EXPECT_NE(out.find("    def count(self):\n        raise NotImplementedError\n"), std::string::npos);
  EXPECT_EQ(out.find("self.n"), std::string::npos);
}

TEST(PlanHollow, OnlyTargetSpanTouched) {
  ToyRepo repo;
  std::string out = repo.hollowed(repo.plan({"Shape.count"}));
  std::string pristine = kModule;
  std::size_t cut = pristine.find("        return self.n * 2");
  EXPECT_EQ(out.substr(0, cut), pristine.substr(0, cut));
  EXPECT_EQ(out.substr(cut), "        raise NotImplementedError\n");
  EXPECT_FALSE(parse_source(out, reg().require("python")).has_error());
}

TEST(EmitPatches, InversePairAndFiles) {
  ToyRepo repo;
  HollowPatches hp = emit_patches(repo.root, repo.plan({"area", "Shape"}));
  EXPECT_EQ(hp.hollow_patch.files, std::vector<std::string>{"src/geo.py"});
  fs::path work = repo.tmp.path() / "w";
  fsutil::copy_tree(repo.root, work);
  apply_patch(work, hp.hollow_patch);
  EXPECT_EQ(apply_patch(work, hp.golden_patch).tree_hash, repo.report.snapshot_id);
}

TEST(EmitPatches, GoldenOnPristineIsBaseMismatch) {
  ToyRepo repo;
  HollowPatches hp = emit_patches(repo.root, repo.plan({"area"}));
  fs::path work = repo.tmp.path() / "w";
  fsutil::copy_tree(repo.root, work);
  EXPECT_EQ(code_of([&] { apply_patch(work, hp.golden_patch); }), ErrorCode::BaseMismatch);
}

struct PolyglotScope {
  AnalysisReport report = analyze_repo(kPolyglot, reg());
  ScopePackage scope = mine_scope(load_coverage(kPolyglot / "coverage.jsonl", report), report).at(0);
  HollowPlan plan = plan_hollow(scope, report, reg(), directory_reader(kPolyglot));
  HollowPatches hp = emit_patches(kPolyglot, plan);
  VerifierMeta meta = load_verifier_meta(kPolyglot / "taskforge-verifier.yaml");
  SandboxSpec spec;
  SandboxPool pool;

  PolyglotScope() {
    spec.substrate_ref = kPolyglot.string();
    spec.repo_snapshot = report.snapshot_id;
    spec = with_verifier_limits(spec, meta);
  }
};

TEST(VerifySolvability, GoldenPatchSolves) {
  PolyglotScope s;
  EXPECT_TRUE(verify_solvability(s.pool, s.spec, s.hp, s.scope.mapped_tests, s.meta));
}

TEST(VerifySolvability, TruncatedGoldenFails) {
  PolyglotScope s;
  ASSERT_GE(s.plan.entries.size(), 2u);
  // Golden patch that restores every entry but the first.
  fsutil::TempDir tmp;
  fs::path full = tmp.path() / "full", partial = tmp.path() / "partial";
  fsutil::copy_tree(kPolyglot, full);
  fsutil::copy_tree(kPolyglot, partial);
  apply_patch(full, s.hp.hollow_patch);
  HollowPlan first = s.plan;
  first.entries.resize(1);
  apply_patch(partial, emit_patches(kPolyglot, first).hollow_patch);
  HollowPatches truncated{s.hp.hollow_patch, diff_snapshot(full, partial)};
  EXPECT_FALSE(verify_solvability(s.pool, s.spec, truncated, s.scope.mapped_tests, s.meta));
}

TEST(VerifySolvability, UnknownHiddenTest) {
  PolyglotScope s;
  auto hidden = s.scope.mapped_tests;
  hidden.push_back("tests/test_nowhere.py::test_ghost");
  EXPECT_FALSE(verify_solvability(s.pool, s.spec, s.hp, hidden, s.meta));
}
