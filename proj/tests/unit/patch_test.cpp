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

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/patch/patch.hpp"

using namespace taskforge;
namespace fs = std::filesystem;

namespace {

const TemplateRegistry& reg() {
  static const TemplateRegistry r =
      TemplateRegistry::load_dir(fs::path(TASKFORGE_SOURCE_DIR) / "templates");
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

const char* kLib =
    "def parse_header(line):\n"
    "    key, _, value = line.partition(':')\n"
    "    return key.strip(), value.strip()\n"
    "\n"
    "\n"
    "def split_lines(text):\n"
    "    return text.split('\\n')\n";

// before/ and after/ trees sharing lib.py, with `after` edited.
struct TwoTrees {
  fsutil::TempDir tmp;
  fs::path before = tmp.path() / "before";
  fs::path after = tmp.path() / "after";

  explicit TwoTrees(const std::string& edited) {
    fsutil::write_file(before / "pkg" / "lib.py", kLib);
    fsutil::write_file(before / "README", "readme\n");
    fsutil::copy_tree(before, after);
    fsutil::write_file(after / "pkg" / "lib.py", edited);
  }
  fs::path work() const {
    fs::path w = tmp.path() / "work";
    fs::remove_all(w);
    fsutil::copy_tree(before, w);
    return w;
  }
};

std::string edit_line(std::string s, const std::string& from, const std::string& to) {
  return s.replace(s.find(from), from.size(), to);
}

}  // namespace

TEST(DiffSnapshot, OneChangedLine) {
  TwoTrees t(edit_line(kLib, "value.strip()", "value"));
  Patch p = diff_snapshot(t.before, t.after);
  EXPECT_EQ(p.files, std::vector<std::string>{"pkg/lib.py"});
  EXPECT_EQ(p.base_snapshot, fsutil::tree_hash(t.before));
  auto diffs = parse_diff(p.diff_text);
  ASSERT_EQ(diffs.size(), 1u);
  EXPECT_EQ(diffs[0].hunks.size(), 1u);
  EXPECT_NE(p.diff_text.find("--- a/pkg/lib.py\n+++ b/pkg/lib.py\n"), std::string::npos);
}

TEST(DiffSnapshot, IdenticalTrees) {
  TwoTrees t(kLib);
  EXPECT_EQ(code_of([&] { diff_snapshot(t.before, t.after); }), ErrorCode::NoChanges);
}

TEST(DiffSnapshot, AddedFileUsesDevNull) {
  TwoTrees t(kLib);
  fsutil::write_file(t.after / "NEW.txt", "fresh\n");
  Patch p = diff_snapshot(t.before, t.after);
  EXPECT_NE(p.diff_text.find("--- /dev/null\n+++ b/NEW.txt\n"), std::string::npos);
}

TEST(ApplyPatch, OntoOwnBaseReproducesAfter) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  fsutil::write_file(t.after / "gone", "x\n");
  Patch p = diff_snapshot(t.before, t.after);
  fs::path w = t.work();
  ApplyResult r = apply_patch(w, p);
  EXPECT_EQ(r.tree_hash, fsutil::tree_hash(t.after));
  EXPECT_EQ(fsutil::manifest(w), fsutil::manifest(t.after));
  EXPECT_EQ(post_state_hash(t.before, p), r.tree_hash);
}

TEST(ApplyPatch, ModifiedBaseInStrictMode) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  Patch p = diff_snapshot(t.before, t.after);
  fs::path w = t.work();
  fsutil::write_file(w / "README", "changed\n");
  EXPECT_EQ(code_of([&] { apply_patch(w, p); }), ErrorCode::BaseMismatch);
  EXPECT_EQ(fsutil::read_file(w / "pkg" / "lib.py"), kLib);
  apply_patch(w, p, /*lenient=*/true);
  EXPECT_NE(fsutil::read_file(w / "pkg" / "lib.py").find("rpartition"), std::string::npos);
}

TEST(ApplyPatch, CorruptedHunkHeader) {
  TwoTrees t(edit_line(kLib, "split('\\n')", "splitlines()"));
  Patch p = diff_snapshot(t.before, t.after);
  std::string text = p.diff_text;
  std::size_t at = text.find("@@ -");
  std::size_t comma = text.find(',', at);
  text.replace(at + 4, comma - at - 4, "1");
  Patch bad = make_patch(text, p.base_snapshot);
  fs::path w = t.work();
  EXPECT_EQ(code_of([&] { apply_patch(w, bad); }), ErrorCode::HunkRejected);
  EXPECT_EQ(fsutil::tree_hash(w), p.base_snapshot);
}

TEST(MakePatch, RejectsGarbage) {
  EXPECT_EQ(code_of([] { make_patch("not a diff\n", "x"); }), ErrorCode::MalformedPatch);
}

TEST(RevertPatch, ApplyThenRevert) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  Patch p = diff_snapshot(t.before, t.after);
  fs::path w = t.work();
  apply_patch(w, p);
  EXPECT_EQ(revert_patch(w, p).tree_hash, p.base_snapshot);
  EXPECT_EQ(fsutil::manifest(w), fsutil::manifest(t.before));
}

TEST(RevertPatch, OnUnpatchedTree) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  Patch p = diff_snapshot(t.before, t.after);
  fs::path w = t.work();
  EXPECT_EQ(code_of([&] { revert_patch(w, p); }), ErrorCode::PostStateMismatch);
}

TEST(RevertPatch, AfterExternalEdit) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  Patch p = diff_snapshot(t.before, t.after);
  fs::path w = t.work();
  apply_patch(w, p);
  fsutil::write_file(w / "README", "touched\n");
  auto snapshot = fsutil::manifest(w);
  EXPECT_EQ(code_of([&] { revert_patch(w, p); }), ErrorCode::PostStateMismatch);
  EXPECT_EQ(fsutil::manifest(w), snapshot);
}

TEST(Reversed, UndoesThePatch) {
  TwoTrees t(edit_line(kLib, "partition", "rpartition"));
  Patch p = diff_snapshot(t.before, t.after);
  Patch back = reversed(p, fsutil::tree_hash(t.after));
  fs::path w = t.work();
  apply_patch(w, p);
  EXPECT_EQ(apply_patch(w, back).tree_hash, p.base_snapshot);
}

TEST(ExtractIdentifiers, BodyEditNamesFunction) {
  TwoTrees t(edit_line(kLib, "value.strip()", "value"));
  CausalFingerprint fp = extract_identifiers(diff_snapshot(t.before, t.after), t.before, reg());
  EXPECT_TRUE(fp.identifiers.contains("parse_header"));
  EXPECT_FALSE(fp.identifiers.contains("split_lines"));
  EXPECT_EQ(fp.files, std::set<std::string>{"pkg/lib.py"});
}

TEST(ExtractIdentifiers, TwoFunctionsInOneFile) {
  std::string edited = edit_line(edit_line(kLib, "value.strip()", "value"), "'\\n'", "'\\r'");
  TwoTrees t(edited);
  CausalFingerprint fp = extract_identifiers(diff_snapshot(t.before, t.after), t.before, reg());
  EXPECT_TRUE(fp.identifiers.contains("parse_header"));
  EXPECT_TRUE(fp.identifiers.contains("split_lines"));
}

// The analyzer's span for split_lines covers its body line; a trailing-space
// change there must still name it.
TEST(ExtractIdentifiers, WhitespaceOnlyChange) {
  TwoTrees t(edit_line(kLib, "split('\\n')\n", "split('\\n')  \n"));
  CausalFingerprint fp = extract_identifiers(diff_snapshot(t.before, t.after), t.before, reg());
  EXPECT_TRUE(fp.identifiers.contains("split_lines"));
}
