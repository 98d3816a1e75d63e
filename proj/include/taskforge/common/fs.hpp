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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taskforge::fsutil {

namespace fs = std::filesystem;

// Directory names never part of a repository snapshot: VCS metadata and the
// per-sandbox artifact area.
inline constexpr std::string_view kArtifactRoot = ".taskforge";
bool is_excluded_dir_name(std::string_view name);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);
// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);

// Repo-relative, '/'-separated paths of regular files and symlinks, sorted
// bytewise. Excluded directories are skipped at every depth.
std::vector<std::string> list_files(const fs::path& root);

// Pending content changes: path -> new bytes, or nullopt for deletion.
using Overlay = std::map<std::string, std::optional<std::string>>;

// Content hash over (path, bytes) pairs of the tree, with `overlay` applied
// virtually on top. Identifies a snapshot everywhere in the pipeline.
std::string tree_hash(const fs::path& root, const Overlay& overlay = {});

// path -> sha256 of bytes (symlinks hash their target text).
std::map<std::string, std::string> manifest(const fs::path& root);

void copy_tree(const fs::path& from, const fs::path& to);

// Owned scratch directory, removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(const fs::path& parent = fs::temp_directory_path(),
                   std::string_view prefix = "taskforge-");
  ~TempDir();
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&& other) noexcept;
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace taskforge::fsutil
