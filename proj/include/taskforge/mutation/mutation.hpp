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
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "taskforge/analysis/analysis.hpp"
#include "taskforge/mutation/modifier.hpp"
#include "taskforge/syntax/tree.hpp"
#include "taskforge/templates/template.hpp"

namespace taskforge {

struct MutationSpec {
  std::string candidate_id;
  ModifierId modifier = ModifierId::op_change;
  std::string target;  // entity_id
  // node_spans[0] is the span of the node captured as @target.
  std::vector<ByteSpan> node_spans;
  std::uint64_t seed = 0;
  std::string snapshot_id;

  friend bool operator==(const MutationSpec&, const MutationSpec&) = default;
};

struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string replacement;

  friend bool operator==(const Edit&, const Edit&) = default;
};

struct EditSet {
  std::string file_path;
  std::vector<Edit> edits;

  friend bool operator==(const EditSet&, const EditSet&) = default;
};

// Sorts by start and checks the invariants against `source`. Throws
// OverlappingEdits, SpanOutOfBounds, or InvalidEditSet (empty, or every
// edit a no-op against `source`).
EditSet normalize_edit_set(EditSet edits, std::string_view source);

// Applies right to left. Throws like normalize_edit_set.
std::string apply_edits(std::string_view source, const EditSet& edit_set);

// Structural requirements of the modifier and the template rule's
// preconditions, evaluated on the report alone. Throws SnapshotMismatch.
bool check_preconditions(const MutationSpec& spec, const AnalysisReport& report,
                         const TemplateRegistry& registry);

// Deterministic EditSet for `spec` on the file containing `entity`.
// Throws TargetVanished when node_spans[0] no longer matches the rule, and
// NoVariantAvailable when the transformation would be a no-op or would
// break the parse.
EditSet plan_edits(const MutationSpec& spec, const EntityRecord& entity,
                   const syntax::SyntaxTree& tree, const CompiledTemplate& tpl);

struct Candidate {
  MutationSpec spec;
  EditSet edits;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Reads a repository file by relative path.
using FileReader = std::function<std::string(const std::string&)>;
FileReader directory_reader(const std::filesystem::path& root);

// One candidate per (non-test entity, modifier) pair for which the rule
// matches inside the entity, preconditions hold and some match yields a
// valid edit. Order is entity order, then modifier order; the sub-seed of
// grid cell i is derive_seed(seed, i) with i = entity_index * 13 + modifier.
std::vector<Candidate> enumerate_candidates(const AnalysisReport& report,
                                            const std::set<ModifierId>& modifiers,
                                            const TemplateRegistry& registry,
                                            std::uint64_t seed, const FileReader& read);

// Specs only; see enumerate_candidates.
std::vector<MutationSpec> enumerate_specs(const AnalysisReport& report,
                                          const std::set<ModifierId>& modifiers,
                                          const TemplateRegistry& registry, std::uint64_t seed,
                                          const FileReader& read);

// Where candidates come from. The procedural source wraps
// enumerate_candidates; the manifest source replays EditSets produced
// elsewhere (for example by a model-driven rewriter).
class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  virtual std::vector<Candidate> candidates(const AnalysisReport& report) = 0;
};

class ProceduralSource : public CandidateSource {
 public:
  ProceduralSource(const TemplateRegistry& registry, std::set<ModifierId> modifiers,
                   std::uint64_t seed, FileReader read);
  std::vector<Candidate> candidates(const AnalysisReport& report) override;

 private:
  const TemplateRegistry* registry_;
  std::set<ModifierId> modifiers_;
  std::uint64_t seed_;
  FileReader read_;
};

// Candidates from a candidates.jsonl file. Entries planned against another
// snapshot are rejected with SnapshotMismatch.
class ManifestSource : public CandidateSource {
 public:
  explicit ManifestSource(std::filesystem::path manifest) : manifest_(std::move(manifest)) {}
  std::vector<Candidate> candidates(const AnalysisReport& report) override;

 private:
  std::filesystem::path manifest_;
};

nlohmann::json to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);
void write_candidates(const std::vector<Candidate>& cs, const std::filesystem::path& path);
std::vector<Candidate> read_candidates(const std::filesystem::path& path);

}  // namespace taskforge
