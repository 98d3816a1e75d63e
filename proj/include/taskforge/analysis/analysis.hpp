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

#include "taskforge/syntax/tree.hpp"
#include "taskforge/templates/template.hpp"

namespace taskforge {

using syntax::ByteSpan;

enum class EntityKind { function, method, class_ };

std::string_view to_string(EntityKind kind);
EntityKind parse_entity_kind(std::string_view s);

struct EntityRecord {
  // "<file_path>::<qualified_name>@<start byte>"; stable within a snapshot.
  std::string entity_id;
  EntityKind kind = EntityKind::function;
  std::string name;
  std::string qualified_name;  // enclosing entity names joined with '.'
  std::string language_id;
  std::string file_path;
  ByteSpan byte_span;
  ByteSpan body_span;
  std::string signature_text;
  int nesting_depth = 0;
  std::set<std::string> complexity;  // "has_<signal>"
  int statement_count = 0;
  bool is_test = false;
  std::optional<std::string> parent_id;

  bool has(std::string_view flag) const { return complexity.contains(std::string(flag)); }
  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

enum class FileStatus { parsed, parse_error, skipped_no_template, skipped_too_large };

std::string_view to_string(FileStatus s);
FileStatus parse_file_status(std::string_view s);

struct AnalysisReport {
  std::string snapshot_id;
  std::vector<EntityRecord> entities;
  std::map<std::string, FileStatus> file_status;

  const EntityRecord* find(std::string_view entity_id) const;
  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

inline constexpr std::uintmax_t kDefaultMaxFileBytes = 2u << 20;

// Parses with the template's grammar. Parse errors are reported on the
// tree (has_error), never thrown.
syntax::SyntaxTree parse_source(std::string bytes, const CompiledTemplate& tpl);

// One record per entity-query match; where a node matches both the function
// and the method query it is a method. Complexity fields are left empty.
std::vector<EntityRecord> extract_entities(const syntax::SyntaxTree& tree,
                                           const CompiledTemplate& tpl, std::string_view path);

// Fills complexity flags and statement_count for `record`.
EntityRecord compute_complexity_signals(EntityRecord record, const syntax::SyntaxTree& tree,
                                        const CompiledTemplate& tpl);

struct FileAnalysis {
  FileStatus status = FileStatus::skipped_no_template;
  std::vector<EntityRecord> entities;
};

// Analysis of one in-memory file: language resolution, parse, extraction
// and signals.
FileAnalysis analyze_file(std::string_view path, std::string bytes,
                          const TemplateRegistry& registry,
                          std::uintmax_t max_bytes = kDefaultMaxFileBytes);

// Walks `root` in path order. snapshot_id is the tree hash of `root`.
// Throws IoError.
AnalysisReport analyze_repo(const std::filesystem::path& root, const TemplateRegistry& registry,
                            std::uintmax_t max_bytes = kDefaultMaxFileBytes);

nlohmann::json to_json(const EntityRecord& r);
EntityRecord entity_from_json(const nlohmann::json& j);

// analysis.jsonl holds one entity per line; snapshot id and per-file status
// go to the sibling analysis.meta.json.
void write_report(const AnalysisReport& report, const std::filesystem::path& jsonl_path);
AnalysisReport read_report(const std::filesystem::path& jsonl_path);
std::filesystem::path meta_path_for(const std::filesystem::path& jsonl_path);

}  // namespace taskforge
