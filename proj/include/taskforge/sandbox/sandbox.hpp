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

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "taskforge/patch/patch.hpp"

namespace taskforge {

// Where and how a command runs. substrate_ref is a directory holding the
// pristine tree; repo_snapshot is its expected tree hash.
struct SandboxSpec {
  std::string substrate_ref;
  std::string repo_snapshot;
  double cpu_time_limit = 120.0;  // seconds
  std::uint64_t memory_limit = 4ull << 30;
  double wall_timeout = 60.0;
  std::map<std::string, std::string> env_vars;

  friend bool operator==(const SandboxSpec&, const SandboxSpec&) = default;
};

// Checks the limits; throws ConfigError.
void validate_spec(const SandboxSpec& spec);

struct ExecutionResult {
  std::optional<int> exit_code;  // nullopt when killed
  std::optional<int> term_signal;
  std::string stdout_text;
  std::string stderr_text;
  double duration = 0.0;
  std::uint64_t peak_memory = 0;
  bool timed_out = false;
  std::map<std::string, std::string> artifacts;  // path under the artifact dir -> bytes
};

class SandboxPool;

// Exclusive handle on one sandbox directory. Released back to its pool on
// destruction unless released explicitly.
class Sandbox {
 public:
  Sandbox() = default;
  Sandbox(Sandbox&& other) noexcept;
  Sandbox& operator=(Sandbox&& other) noexcept;
  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;
  ~Sandbox();

  bool valid() const { return state_ != nullptr; }
  const std::filesystem::path& root() const;
  std::filesystem::path artifact_dir() const;
  const SandboxSpec& spec() const;
  // True when this lease reused a warm sandbox.
  bool warm() const { return warm_; }

  struct State;

 private:
  friend class SandboxPool;
  friend ExecutionResult run(Sandbox&, const std::vector<std::string>&, const std::string&);
  Sandbox(SandboxPool* pool, std::unique_ptr<State> state, bool warm);

  SandboxPool* pool_ = nullptr;
  std::unique_ptr<State> state_;
  bool warm_ = false;
};

struct PoolOptions {
  std::size_t max_size = 4;
  bool blocking = true;
  std::filesystem::path work_root = std::filesystem::temp_directory_path();
};

struct PoolStats {
  std::size_t cold_creations = 0;
  std::size_t warm_reuses = 0;
  std::size_t destroyed = 0;
  std::size_t live = 0;
};

class SandboxPool {
 public:
  explicit SandboxPool(PoolOptions options = {});
  ~SandboxPool();
  SandboxPool(const SandboxPool&) = delete;
  SandboxPool& operator=(const SandboxPool&) = delete;

  // Throws PoolShutDown, PoolExhausted (non-blocking and full),
  // SnapshotUnavailable.
  Sandbox lease(const SandboxSpec& spec);

  // Resets the tree to the pristine snapshot and verifies it by hash; a
  // sandbox that fails verification is destroyed. Never throws.
  void release(Sandbox&& sandbox);

  // Revokes idle sandboxes and fails future leases.
  void shutdown();

  PoolStats stats() const;
  const PoolOptions& options() const { return options_; }

  // Runs after the reset and before verification (tests use it to
  // simulate a reset that leaves debris).
  void set_reset_hook(std::function<void(const std::filesystem::path&)> hook);

 private:
  friend class Sandbox;
  struct Pristine;
  std::shared_ptr<const Pristine> pristine_for(const SandboxSpec& spec);
  std::unique_ptr<Sandbox::State> create(const SandboxSpec& spec);
  void destroy(std::unique_ptr<Sandbox::State> state);
  bool reset(Sandbox::State& state);

  PoolOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool shut_down_ = false;
  std::size_t live_ = 0;
  std::uint64_t next_id_ = 0;
  std::multimap<std::string, std::unique_ptr<Sandbox::State>> idle_;  // by snapshot
  std::shared_ptr<std::atomic<bool>> revoked_;
  std::mutex pristine_mu_;
  std::map<std::string, std::shared_ptr<const Pristine>> pristine_;
  PoolStats stats_;
  std::function<void(const std::filesystem::path&)> reset_hook_;
};

// Runs argv with the sandbox's limits. working_dir is relative to the
// sandbox root. The artifact directory is emptied first and exported as
// TASKFORGE_ARTIFACT_DIR. Throws SpawnFailed (detail carries the errno
// name) and SandboxRevoked.
ExecutionResult run(Sandbox& sandbox, const std::vector<std::string>& argv,
                    const std::string& working_dir = ".");

// lease -> apply_patch (when given) -> run -> release, releasing on every
// path. Infrastructure failures (sandbox creation, transient spawn errors)
// are retried up to `retries` times.
ExecutionResult with_candidate(SandboxPool& pool, const SandboxSpec& spec, const Patch* patch,
                               const std::vector<std::string>& argv, int retries = 2);

// Same, applying `patches` in order (each strictly, against the tree the
// previous one produced).
ExecutionResult with_patches(SandboxPool& pool, const SandboxSpec& spec,
                             const std::vector<const Patch*>& patches,
                             const std::vector<std::string>& argv, int retries = 2);

}  // namespace taskforge
