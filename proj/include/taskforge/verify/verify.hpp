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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "taskforge/patch/patch.hpp"
#include "taskforge/sandbox/sandbox.hpp"

namespace taskforge {

enum class TestStatus { pass, fail, error, skip };

std::string_view to_string(TestStatus s);
// Unknown names map to error.
TestStatus parse_test_status(std::string_view s);
inline bool fail_like(TestStatus s) { return s == TestStatus::fail || s == TestStatus::error; }

inline constexpr std::size_t kMaxMessageBytes = 64 * 1024;

struct TestOutcome {
  std::string test_id;  // "suite::case"
  TestStatus status = TestStatus::pass;
  double duration = 0.0;
  std::string message;

  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

enum class ArtifactFormat { junit_xml, jsonl_stream, standard_result };

std::string_view to_string(ArtifactFormat f);
ArtifactFormat parse_artifact_format(std::string_view s);  // throws ConfigError

// One outcome per test case, in document order. jsonl_stream is the
// go-test-json event stream: id = Package::Test, a test that never finishes
// is an error and a second terminal event is a duplicate. Throws
// MalformedArtifact (subject = offset or line) and DuplicateTestId.
std::vector<TestOutcome> parse_test_report(std::string_view artifact, ArtifactFormat format);

// The standard result document with keys in schema order.
std::string render_standard_result(const std::vector<TestOutcome>& tests, int exit_code,
                                   double duration_s);

enum class FailureClass { env_failure, test_failure, unknown };
std::string_view to_string(FailureClass c);

struct FailureSignature {
  std::string pattern;  // ECMAScript regex, searched in stderr then stdout
  FailureClass cls = FailureClass::unknown;
};

// Ordered: dependency and toolchain signatures before assertion ones.
const std::vector<FailureSignature>& default_signatures();

struct ArtifactSpec {
  std::string path;  // relative to the artifact directory
  ArtifactFormat format = ArtifactFormat::standard_result;
};

// taskforge-verifier.yaml: command, then either artifact_path + format or an
// `artifacts` list; optional wall_timeout and signatures.
struct VerifierMeta {
  std::vector<std::string> command;
  std::vector<ArtifactSpec> artifacts;
  std::optional<double> wall_timeout;
  std::vector<FailureSignature> signatures;  // empty: defaults
};

VerifierMeta parse_verifier_meta(std::string_view yaml_text);
VerifierMeta load_verifier_meta(const std::filesystem::path& path);
// The spec with the verifier's wall timeout applied.
SandboxSpec with_verifier_limits(SandboxSpec spec, const VerifierMeta& meta);

struct ClassifiedFailure {
  FailureClass cls = FailureClass::unknown;
  std::string evidence;  // the matching pattern
};

ClassifiedFailure classify_failure(const ExecutionResult& result,
                                   const std::vector<FailureSignature>& signatures);

// Parses every declared artifact of `result` and merges them. A missing
// artifact is MalformedArtifact with detail "missing".
std::vector<TestOutcome> collect_outcomes(const ExecutionResult& result, const VerifierMeta& meta);

struct RunMeta {
  std::optional<int> exit_code;
  double duration = 0.0;
  std::string substrate_ref;
  bool timed_out = false;
  bool artifact_valid = true;
  std::vector<std::string> flaky;  // baseline only

  friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

struct OutcomeVector {
  std::map<std::string, TestStatus> outcomes;
  RunMeta run_meta;

  friend bool operator==(const OutcomeVector&, const OutcomeVector&) = default;
};

// A vector from one run. Unparseable or missing artifacts give an empty
// vector with artifact_valid = false, so every baseline test counts as an
// error against it.
OutcomeVector outcome_vector(const ExecutionResult& result, const VerifierMeta& meta,
                             const std::string& substrate_ref);

nlohmann::json to_json(const OutcomeVector& v);
OutcomeVector outcome_vector_from_json(const nlohmann::json& j);

struct TestPartition {
  std::set<std::string> p2f;
  std::set<std::string> p2p;
  std::set<std::string> f2p;
  std::set<std::string> f2f;

  friend bool operator==(const TestPartition&, const TestPartition&) = default;
};

// Over baseline tests only. Missing in `cand` counts as error; a skip on
// either side keeps the test out of every set.
TestPartition partition_outcomes(const OutcomeVector& base, const OutcomeVector& cand);

inline bool accept_candidate(const TestPartition& p) { return !p.p2f.empty(); }

struct ReadinessReport {
  enum class Classification { ready, env_failure, harness_failure };
  Classification classification = Classification::harness_failure;
  std::string evidence;
  bool artifact_valid = false;

  bool ready() const { return classification == Classification::ready; }
};

std::string_view to_string(ReadinessReport::Classification c);

// Runs the verifier once in a fresh lease. When log_dir is given, stdout,
// stderr and the report are written there whatever the outcome.
ReadinessReport readiness_gate(SandboxPool& pool, const SandboxSpec& spec, const VerifierMeta& meta,
                               const std::optional<std::filesystem::path>& log_dir = std::nullopt);

// Two runs on the pristine snapshot; tests whose status differs (or which
// appear in only one run) are dropped and listed in run_meta.flaky. Throws
// NotReady when either run is not usable as a baseline.
OutcomeVector run_baseline(SandboxPool& pool, const SandboxSpec& spec, const VerifierMeta& meta);

// One verifier run with `patches` applied in order.
OutcomeVector run_candidate(SandboxPool& pool, const SandboxSpec& spec,
                            const std::vector<const Patch*>& patches, const VerifierMeta& meta,
                            ExecutionResult* raw = nullptr);
inline OutcomeVector run_candidate(SandboxPool& pool, const SandboxSpec& spec, const Patch& patch,
                                   const VerifierMeta& meta, ExecutionResult* raw = nullptr) {
  return run_candidate(pool, spec, std::vector<const Patch*>{&patch}, meta, raw);
}

}  // namespace taskforge
