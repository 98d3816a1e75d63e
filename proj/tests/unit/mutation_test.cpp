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

#include <random>

#include "taskforge/analysis/analysis.hpp"
#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/mutation/mutation.hpp"

using namespace taskforge;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TASKFORGE_SOURCE_DIR;

const TemplateRegistry& reg() {
  static const TemplateRegistry r = TemplateRegistry::load_dir(kSource / "templates");
  return r;
}

struct OneFile {
  std::string path;
  std::string src;
  AnalysisReport report;

  OneFile(std::string p, std::string s) : path(std::move(p)), src(std::move(s)) {
    auto fa = analyze_file(path, src, reg());
    report.snapshot_id = "snap";
    report.entities = fa.entities;
    report.file_status[path] = fa.status;
  }
  FileReader reader() const {
    return [this](const std::string&) { return src; };
  }
  std::vector<Candidate> candidates(ModifierId m, std::uint64_t seed = 7) const {
    return enumerate_candidates(report, {m}, reg(), seed, reader());
  }
  // The single candidate for `m`, applied.
  std::string mutate(ModifierId m, std::uint64_t seed = 7) const {
    auto cs = candidates(m, seed);
    if (cs.size() != 1) throw std::runtime_error("expected one candidate, got " + std::to_string(cs.size()));
    return apply_edits(src, cs[0].edits);
  }
  MutationSpec spec_for(const std::string& name, ModifierId m) const {
    MutationSpec s;
    s.modifier = m;
    s.snapshot_id = report.snapshot_id;
    for (const auto& e : report.entities)
      if (e.name == name) s.target = e.entity_id;
    return s;
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(EnumerateCandidates, NoLoopMeansNoBlockDrop) {
  OneFile f("m.py", "def add(a, b):\n    return a + b\n");
  EXPECT_TRUE(f.candidates(ModifierId::block_drop).empty());
  EXPECT_EQ(f.candidates(ModifierId::op_change).size(), 1u);
}

TEST(EnumerateCandidates, TestEntitiesAreSkipped) {
  OneFile f("tests/test_m.py", "def test_add():\n    x = 1\n    assert x + 1 == 2\n");
  std::set<ModifierId> all(all_modifiers().begin(), all_modifiers().end());
  EXPECT_TRUE(enumerate_candidates(f.report, all, reg(), 7, f.reader()).empty());
}

TEST(EnumerateCandidates, DeterministicOnFixture) {
  fs::path root = kSource / "tests" / "fixtures" / "polyglot";
  AnalysisReport report = analyze_repo(root, reg());
  std::set<ModifierId> all(all_modifiers().begin(), all_modifiers().end());
  fsutil::TempDir tmp;
  write_candidates(enumerate_candidates(report, all, reg(), 7, directory_reader(root)), tmp.path() / "a.jsonl");
  write_candidates(enumerate_candidates(report, all, reg(), 7, directory_reader(root)), tmp.path() / "b.jsonl");
  std::string a = fsutil::read_file(tmp.path() / "a.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, fsutil::read_file(tmp.path() / "b.jsonl"));
}

TEST(EnumerateCandidates, CandidateFileRoundTrip) {
  OneFile f("m.py", "def f(a, b):\n    if a < b:\n        return a - b\n    return 10\n");
  std::set<ModifierId> all(all_modifiers().begin(), all_modifiers().end());
  auto cs = enumerate_candidates(f.report, all, reg(), 3, f.reader());
  ASSERT_FALSE(cs.empty());
  fsutil::TempDir tmp;
  write_candidates(cs, tmp.path() / "c.jsonl");
  EXPECT_EQ(read_candidates(tmp.path() / "c.jsonl"), cs);
}

TEST(CheckPreconditions, SingleStatementCannotShuffle) {
  OneFile f("m.py", "def f():\n    return 1\n");
  EXPECT_FALSE(check_preconditions(f.spec_for("f", ModifierId::stmt_shuffle), f.report, reg()));
}

TEST(CheckPreconditions, BaseDropOnOneBase) {
  OneFile f("m.py", "class A(B):\n    x = 1\n");
  EXPECT_TRUE(check_preconditions(f.spec_for("A", ModifierId::base_drop), f.report, reg()));
}

TEST(CheckPreconditions, StaleSnapshot) {
  OneFile f("m.py", "def f():\n    return 1\n");
  MutationSpec s = f.spec_for("f", ModifierId::const_mod);
  s.snapshot_id = "old";
  EXPECT_EQ(code_of([&] { check_preconditions(s, f.report, reg()); }), ErrorCode::SnapshotMismatch);
}

TEST(PlanEdits, OpChange) {
  EXPECT_EQ(OneFile("m.py", "def f(a, b):\n    return a + b\n").mutate(ModifierId::op_change),
            "def f(a, b):\n    return a - b\n");
}

TEST(PlanEdits, OpFlip) {
  EXPECT_EQ(OneFile("m.py", "def f(x, y):\n    return x == y\n").mutate(ModifierId::op_flip),
            "def f(x, y):\n    return x != y\n");
}

TEST(PlanEdits, OperandSwap) {
  EXPECT_EQ(OneFile("m.py", "def f(a, b):\n    return a - b\n").mutate(ModifierId::operand_swap),
            "def f(a, b):\n    return b - a\n");
}

TEST(PlanEdits, ChainBreak) {
  EXPECT_EQ(OneFile("m.js", "function f(a, b) {\n  return a+b;\n}\n").mutate(ModifierId::chain_break),
            "function f(a, b) {\n  return a;\n}\n");
}

TEST(PlanEdits, ConstModFollowsSeedParity) {
  OneFile f("m.py", "def f():\n    return 10\n");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto cs = f.candidates(ModifierId::const_mod, seed);
    ASSERT_EQ(cs.size(), 1u);
    std::string want = cs[0].spec.seed % 2 == 0 ? "11" : "9";
    EXPECT_EQ(apply_edits(f.src, cs[0].edits), "def f():\n    return " + want + "\n");
  }
}

TEST(PlanEdits, StmtShuffleOfTwo) {
  EXPECT_EQ(OneFile("m.py", "def f():\n    a()\n    b()\n").mutate(ModifierId::stmt_shuffle),
            "def f():\n    b()\n    a()\n");
}

TEST(PlanEdits, BaseDrop) {
  std::string out = OneFile("m.py", "class A(B):\n    x = 1\n").mutate(ModifierId::base_drop);
  EXPECT_EQ(out.substr(0, out.find(':')), "class A");
}

TEST(ApplyEdits, EmptyEditSetRejected) {
  EXPECT_EQ(code_of([] { apply_edits("", EditSet{"a.py", {}}); }), ErrorCode::InvalidEditSet);
}

TEST(ApplyEdits, NoOpEditSetRejected) {
  EXPECT_EQ(code_of([] { apply_edits("a + b", EditSet{"a.py", {{2, 3, "+"}}}); }),
            ErrorCode::InvalidEditSet);
}

TEST(ApplyEdits, SingleReplacement) {
  EXPECT_EQ(apply_edits("a + b", EditSet{"a.py", {{2, 3, "-"}}}), "a - b");
}

TEST(ApplyEdits, OverlapAndBounds) {
  EXPECT_EQ(code_of([] { apply_edits("abcdef", EditSet{"a", {{1, 4, "x"}, {3, 5, "y"}}}); }),
            ErrorCode::OverlappingEdits);
  EXPECT_EQ(code_of([] { apply_edits("abc", EditSet{"a", {{2, 9, "x"}}}); }),
            ErrorCode::SpanOutOfBounds);
}

// Splices directly, right to left, as an oracle.
TEST(ApplyEdits, PairOrderIndependence) {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 2000; ++round) {
    std::string src(1 + rng() % 30, 'a');
    for (auto& c : src) c = static_cast<char>('a' + rng() % 26);
    std::size_t cuts[4];
    for (auto& c : cuts) c = rng() % (src.size() + 1);
    std::sort(std::begin(cuts), std::end(cuts));
    Edit e1{cuts[0], cuts[1], std::string(rng() % 4, 'X')};
    Edit e2{cuts[2], cuts[3], std::string(1 + rng() % 3, 'Y')};
    // An insertion at the start of another edit has no defined order.
    if (e1.start == e2.start) continue;

    std::string want = src;
    want.replace(e2.start, e2.end - e2.start, e2.replacement);
    want.replace(e1.start, e1.end - e1.start, e1.replacement);

    bool noop1 = e1.start == e1.end && e1.replacement.empty();
    EditSet fwd{"f", {e1, e2}}, rev{"f", {e2, e1}};
    if (noop1) {
      fwd.edits = {e2};
      rev.edits = {e2};
    }
    EXPECT_EQ(apply_edits(src, fwd), want) << "round " << round;
    EXPECT_EQ(apply_edits(src, rev), want) << "round " << round;
  }
}
