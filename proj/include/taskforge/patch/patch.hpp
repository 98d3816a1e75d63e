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

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taskforge/common/fs.hpp"
#include "taskforge/templates/template.hpp"

namespace taskforge {

// A git-style unified diff (a/ b/ prefixes, 3 context lines, LF) bound to
// the tree it applies to.
struct Patch {
  std::string diff_text;
  std::vector<std::string> files;  // sorted
  std::string base_snapshot;
  std::string patch_id;  // sha256 of diff_text

  friend bool operator==(const Patch&, const Patch&) = default;
};

struct Hunk {
  std::size_t old_start = 0;  // 1-based; for an empty side, the line before
  std::size_t old_count = 0;
  std::size_t new_start = 0;
  std::size_t new_count = 0;
  // (' ' | '-' | '+', line bytes including its '\n' when it has one)
  std::vector<std::pair<char, std::string>> lines;
};

struct FileDiff {
  std::optional<std::string> old_path;  // nullopt for /dev/null
  std::optional<std::string> new_path;
  std::vector<Hunk> hunks;

  const std::string& path() const { return new_path ? *new_path : *old_path; }
};

// Throws MalformedPatch.
std::vector<FileDiff> parse_diff(std::string_view diff_text);

// Unified diff of one file; nullopt content means absent. Empty string when
// equal. Throws BinaryFile when either side contains a NUL byte.
std::string diff_file(const std::string& path, const std::optional<std::string>& before,
                      const std::optional<std::string>& after);

// Validates diff_text and fills files and patch_id. Throws MalformedPatch.
Patch make_patch(std::string diff_text, std::string base_snapshot);

// Minimal line diff between two directory trees. Throws NoChanges, IoError,
// BinaryFile.
Patch diff_snapshot(const std::filesystem::path& before, const std::filesystem::path& after);

// Diff of `root` against `root` with `changes` applied. base_snapshot is
// computed unless given.
Patch diff_overlay(const std::filesystem::path& root, const fsutil::Overlay& changes,
                   std::optional<std::string> base_snapshot = std::nullopt);

// The new contents of every touched file, computed without writing.
// Throws HunkRejected.
fsutil::Overlay materialize(const std::filesystem::path& root, const Patch& patch,
                            bool lenient = false);

struct ApplyResult {
  std::string tree_hash;
  std::vector<std::string> files;
};

// All or nothing. Strict mode requires tree_hash(workdir) == base_snapshot
// (BaseMismatch) and every hunk at its recorded position (HunkRejected);
// lenient mode skips the hash check and lets hunks move.
ApplyResult apply_patch(const std::filesystem::path& workdir, const Patch& patch,
                        bool lenient = false);

// Undoes `patch`; the restored tree must hash to base_snapshot. Throws
// PostStateMismatch otherwise, leaving workdir untouched.
ApplyResult revert_patch(const std::filesystem::path& workdir, const Patch& patch);

// The inverse diff, based on `post_snapshot` (the tree the patch produces).
Patch reversed(const Patch& patch, std::string post_snapshot);

// Tree hash `root` would have after applying `patch` to it.
std::string post_state_hash(const std::filesystem::path& root, const Patch& patch);

struct CausalFingerprint {
  std::set<std::string> files;
  std::set<std::string> identifiers;
};

// Names of entities whose spans intersect changed lines, on either side of
// the patch; `root` holds the base state. Throws AnalysisFailed when a
// changed source file does not parse at the base.
CausalFingerprint extract_identifiers(const Patch& patch, const std::filesystem::path& root,
                                      const TemplateRegistry& registry);

}  // namespace taskforge
