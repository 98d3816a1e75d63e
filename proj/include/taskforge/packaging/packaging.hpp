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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "taskforge/patch/patch.hpp"
#include "taskforge/sandbox/sandbox.hpp"
#include "taskforge/verify/verify.hpp"

namespace taskforge {

enum class TaskFamily { swe_scale, bug_agent, swe_architect };

std::string_view to_string(TaskFamily f);
TaskFamily parse_task_family(std::string_view s);  // throws SchemaViolation

struct RepoSpec {
  std::string location;  // substrate directory
  std::string snapshot;

  friend bool operator==(const RepoSpec&, const RepoSpec&) = default;
};

struct ProblemStatement {
  std::string text;
  std::string generated_by = "template";  // template | external

  friend bool operator==(const ProblemStatement&, const ProblemStatement&) = default;
};

struct Validation {
  std::vector<std::string> p2f;
  std::vector<std::string> p2p;
  std::vector<std::string> hidden_tests;

  friend bool operator==(const Validation&, const Validation&) = default;
};

// Field order here is the serialization order. oracle_patch is based on the
// tree problem_patch produces: the reverse patch for repair families, the
// golden patch for construction.
struct TaskRecord {
  TaskFamily family = TaskFamily::swe_scale;
  RepoSpec repo;
  Patch problem_patch;
  ProblemStatement problem_statement;
  Patch oracle_patch;
  Validation validation;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  // metadata.task_id when present, else the problem patch id.
  std::string task_id() const;
  friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

// Throws SchemaViolation(field). Test id lists are sorted and deduplicated.
TaskRecord build_record(TaskFamily family, RepoSpec repo, Patch problem_patch,
                        ProblemStatement problem_statement, Patch oracle_patch,
                        Validation validation, nlohmann::ordered_json metadata = {});

// Schema invariants only, as SchemaViolation.
void check_schema(const TaskRecord& record);

nlohmann::ordered_json to_json(const TaskRecord& r);
TaskRecord record_from_json(const nlohmann::ordered_json& j);  // throws SchemaViolation
std::string serialize(const TaskRecord& r);  // one line, no newline

void write_records(const std::vector<TaskRecord>& records, const std::filesystem::path& path);
std::vector<TaskRecord> read_records(const std::filesystem::path& path);

// Issues: "schema:<field>", "patch-unappliable", "oracle-unappliable",
// "oracle-inconsistent", "unknown-test-id:<id>". Empty means publishable.
// `baseline` supplies the known test ids.
std::vector<std::string> validate_record(const TaskRecord& record, SandboxPool& pool,
                                         const OutcomeVector& baseline);

struct LeakageViolation {
  std::string kind;  // identifier | file | fix_suggestion | empty
  std::string excerpt;

  friend bool operator==(const LeakageViolation&, const LeakageViolation&) = default;
};

struct LeakageVerdict {
  bool accepted = false;
  std::vector<LeakageViolation> violations;
};

// Case-insensitive ECMAScript patterns.
const std::vector<std::string>& default_fix_patterns();

// Identifiers and file paths (also their base names) count as whole tokens
// only. Occurrences of allowed failing test ids, or of their case names,
// are ignored.
LeakageVerdict leakage_filter(std::string_view statement, const CausalFingerprint& fingerprint,
                              const std::vector<std::string>& allowed_test_ids,
                              const std::vector<std::string>& fix_patterns = default_fix_patterns());

// Symptom-only statement from a candidate run: the failing tests, each with
// one line of its failure message (the exception line of a traceback).
// Excerpts the leakage filter would reject are dropped.
ProblemStatement render_problem_statement(const TestPartition& partition,
                                          const std::vector<TestOutcome>& candidate_outcomes,
                                          const CausalFingerprint& fingerprint);

struct ReplayReport {
  bool bug_reproduced = false;
  bool oracle_restores = false;

  friend bool operator==(const ReplayReport&, const ReplayReport&) = default;
};

// Repair families: the problem run must give exactly validation.p2f against
// `baseline`, and problem+oracle must pass every p2f and p2p test.
// Construction: some hidden test must fail on the hollowed tree, and all
// must pass with the golden patch.
ReplayReport replay_record(const TaskRecord& record, SandboxPool& pool, const SandboxSpec& spec,
                           const VerifierMeta& meta, const OutcomeVector& baseline);

}  // namespace taskforge
