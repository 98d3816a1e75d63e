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
#include <set>
#include <string>
#include <vector>

#include "taskforge/analysis/analysis.hpp"
#include "taskforge/mutation/mutation.hpp"
#include "taskforge/patch/patch.hpp"
#include "taskforge/sandbox/sandbox.hpp"
#include "taskforge/verify/verify.hpp"

namespace taskforge {

struct CoverageMap {
  std::map<std::string, std::set<std::string>> edges;  // test id -> entity ids
};

// Coverage lines are {"test": id, "covers": [entity id, ...]}. Entity ids
// may omit the "@offset" suffix when "path::qualified_name" is unique in
// the report. Throws DanglingEntityId, SchemaViolation (bad line).
CoverageMap parse_coverage(std::string_view jsonl, const AnalysisReport& report);
CoverageMap load_coverage(const std::filesystem::path& path, const AnalysisReport& report);

struct ScopePackage {
  std::vector<std::string> target_entities;  // sorted
  std::vector<std::string> mapped_tests;     // sorted
  double cohesion = 0.0;
  double isolation = 0.0;

  friend bool operator==(const ScopePackage&, const ScopePackage&) = default;
};

struct ScopeParams {
  std::size_t min_entities = 3;
  double min_isolation = 0.8;
};

// Clusters are the connected components of the test-entity graph over
// non-test entities. cohesion = edges / (tests * entities) inside the
// cluster; isolation = 1 - (edges from cluster tests to test-file entities
// / all edges of cluster tests). Ordered by isolation desc, size desc, then
// first entity id. Throws DanglingEntityId.
std::vector<ScopePackage> mine_scope(const CoverageMap& coverage, const AnalysisReport& report,
                                     const ScopeParams& params = {});

struct HollowEntry {
  std::string entity_id;
  std::string file_path;
  ByteSpan body_span;
  std::string stub_text;

  friend bool operator==(const HollowEntry&, const HollowEntry&) = default;
};

struct HollowPlan {
  std::string snapshot_id;
  std::vector<HollowEntry> entries;  // by file, then offset; non-overlapping
};

// Class targets expand to their methods; an entity nested in another
// target's body is covered by that body. `read` returns file bytes at the
// report's snapshot. Throws MissingTemplate.
HollowPlan plan_hollow(const ScopePackage& scope, const AnalysisReport& report,
                       const TemplateRegistry& registry, const FileReader& read);

struct HollowPatches {
  Patch hollow_patch;  // pristine -> hollowed
  Patch golden_patch;  // hollowed -> pristine
};

HollowPatches emit_patches(const std::filesystem::path& workdir, const HollowPlan& plan);

// Runs the verifier on pristine + hollow + golden; true iff every hidden
// test passes (absent counts as failing).
bool verify_solvability(SandboxPool& pool, const SandboxSpec& spec, const HollowPatches& patches,
                        const std::vector<std::string>& hidden_tests, const VerifierMeta& meta);

}  // namespace taskforge
