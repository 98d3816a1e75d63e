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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taskforge/mutation/modifier.hpp"
#include "taskforge/sandbox/sandbox.hpp"

namespace taskforge {

enum class Stage { analyze, gate, forge, verify, package, hollow, replay };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

struct PipelineConfig {
  std::filesystem::path repo_path;
  std::filesystem::path templates_dir = "templates";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::set<ModifierId> modifiers;  // empty: all
  double cpu_time_limit = 120.0;
  std::uint64_t memory_limit = 4ull << 30;
  double wall_timeout = 60.0;
  std::filesystem::path verifier;  // default: <repo>/taskforge-verifier.yaml
  std::filesystem::path out_dir = "out";
  std::filesystem::path work_root;  // sandbox parent; default: system temp

  // Stage-specific inputs and outputs; empty means the default under out_dir.
  std::filesystem::path package_in;   // candidates-verified.jsonl
  std::filesystem::path package_out;  // tasks.jsonl
  std::filesystem::path coverage;     // default: <repo>/coverage.jsonl
  std::size_t min_entities = 3;
  double min_isolation = 0.8;
  std::filesystem::path replay_in;  // tasks.jsonl
};

// Keys mirror the struct fields (modifiers as a list of names, limits under
// `limits:`). Relative paths resolve against the config file's directory.
// Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Throws ConfigError.
void validate_config(const PipelineConfig& config, Stage stage);

struct StageResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;  // one line per fact, for the terminal
};

// Runs one stage. Every artifact is written atomically. Throws
// MissingPrerequisite(stage) when an earlier stage's output is absent,
// ConfigError, NotReady (verify and hollow on a substrate that fails the
// readiness gate).
StageResult run_pipeline(const PipelineConfig& config, Stage stage);

// Output locations under out_dir.
namespace artifacts {
inline constexpr const char* kAnalysis = "analysis.jsonl";
inline constexpr const char* kReadiness = "readiness.json";
inline constexpr const char* kCandidates = "candidates.jsonl";
inline constexpr const char* kBaseline = "baseline.json";
inline constexpr const char* kVerified = "candidates-verified.jsonl";
inline constexpr const char* kTasks = "tasks.jsonl";
inline constexpr const char* kPackageReport = "package-report.json";
inline constexpr const char* kScopes = "scopes.json";
inline constexpr const char* kArchitectTasks = "architect-tasks.jsonl";
inline constexpr const char* kReplay = "replay.jsonl";
}  // namespace artifacts

}  // namespace taskforge
