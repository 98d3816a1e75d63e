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

#include "taskforge/common/fs.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "taskforge/common/error.hpp"
#include "taskforge/common/hash.hpp"

namespace taskforge::fsutil {

bool is_excluded_dir_name(std::string_view name) {
  return name == ".git" || name == kArtifactRoot;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, path.string(), "read failed");
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, path.string(), "write failed");
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  write_file(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, path.string(), "rename failed");
  }
}

namespace {

void collect(const fs::path& root, const fs::path& dir, std::vector<std::string>& out) {
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    const auto& entry = *it;
    const auto name = entry.path().filename().string();
    auto st = entry.symlink_status();
    if (fs::is_directory(st)) {
      if (is_excluded_dir_name(name)) continue;
      collect(root, entry.path(), out);
    } else if (fs::is_regular_file(st) || fs::is_symlink(st)) {
      out.push_back(fs::relative(entry.path(), root).generic_string());
    }
  }
  if (ec) throw Error(ErrorCode::IoError, dir.string(), ec.message());
}

std::string entry_bytes(const fs::path& p) {
  if (fs::is_symlink(fs::symlink_status(p))) {
    return "symlink:" + fs::read_symlink(p).string();
  }
  return read_file(p);
}

}  // namespace

std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::is_directory(root)) throw Error(ErrorCode::IoError, root.string(), "not a directory");
  collect(root, root, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::string tree_hash(const fs::path& root, const Overlay& overlay) {
  std::vector<std::string> paths = list_files(root);
  for (const auto& [p, content] : overlay) {
    if (content && !std::binary_search(paths.begin(), paths.end(), p)) paths.push_back(p);
  }
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

  Sha256 h;
  for (const auto& p : paths) {
    std::string bytes;
    if (auto it = overlay.find(p); it != overlay.end()) {
      if (!it->second) continue;
      bytes = *it->second;
    } else {
      bytes = entry_bytes(root / p);
    }
    h.update(p).update(std::string_view("\0", 1)).update_u64(bytes.size()).update(bytes);
  }
  return h.hex_digest();
}

std::map<std::string, std::string> manifest(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& p : list_files(root)) out.emplace(p, sha256_hex(entry_bytes(root / p)));
  return out;
}

void copy_tree(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::create_directories(to, ec);
  for (const auto& rel : list_files(from)) {
    const fs::path src = from / rel;
    const fs::path dst = to / rel;
    fs::create_directories(dst.parent_path(), ec);
    if (fs::is_symlink(fs::symlink_status(src))) {
      fs::remove(dst, ec);
      fs::copy_symlink(src, dst, ec);
    } else {
      fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
    }
    if (ec) throw Error(ErrorCode::IoError, dst.string(), ec.message());
  }
}

TempDir::TempDir(const fs::path& parent, std::string_view prefix) {
  std::error_code ec;
  fs::create_directories(parent, ec);
  std::string templ = (parent / (std::string(prefix) + "XXXXXX")).string();
  if (::mkdtemp(templ.data()) == nullptr) {
    throw Error(ErrorCode::IoError, templ, std::strerror(errno));
  }
  path_ = templ;
}

TempDir::~TempDir() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::exchange(other.path_, {})) {}

TempDir& TempDir::operator=(TempDir&& other) noexcept {
  if (this != &other) {
    if (!path_.empty()) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
    path_ = std::exchange(other.path_, {});
  }
  return *this;
}

}  // namespace taskforge::fsutil
