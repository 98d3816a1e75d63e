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

#include "taskforge/analysis/analysis.hpp"

#include <algorithm>
#include <fstream>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"
#include "taskforge/common/glob.hpp"

namespace taskforge {

using nlohmann::json;
using syntax::kNoNode;
using syntax::NodeId;
using syntax::SyntaxTree;

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::function: return "function";
    case EntityKind::method: return "method";
    case EntityKind::class_: return "class";
  }
  return "function";
}

EntityKind parse_entity_kind(std::string_view s) {
  if (s == "function") return EntityKind::function;
  if (s == "method") return EntityKind::method;
  if (s == "class") return EntityKind::class_;
  throw Error(ErrorCode::SchemaViolation, "kind", std::string(s));
}

std::string_view to_string(FileStatus s) {
  switch (s) {
    case FileStatus::parsed: return "parsed";
    case FileStatus::parse_error: return "parse_error";
    case FileStatus::skipped_no_template: return "skipped_no_template";
    case FileStatus::skipped_too_large: return "skipped_too_large";
  }
  return "parsed";
}

FileStatus parse_file_status(std::string_view s) {
  for (auto st : {FileStatus::parsed, FileStatus::parse_error, FileStatus::skipped_no_template,
                  FileStatus::skipped_too_large}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::SchemaViolation, "file_status", std::string(s));
}

const EntityRecord* AnalysisReport::find(std::string_view entity_id) const {
  for (const auto& e : entities) {
    if (e.entity_id == entity_id) return &e;
  }
  return nullptr;
}

syntax::SyntaxTree parse_source(std::string bytes, const CompiledTemplate& tpl) {
  return tpl.grammar->parse(std::move(bytes));
}

namespace {

// Outermost node whose span is exactly `span` (a one-statement block and its
// statement share a span; the block is wanted).
NodeId outermost_with_span(const SyntaxTree& tree, ByteSpan span) {
  NodeId n = tree.root();
  if (n == kNoNode) return kNoNode;
  for (;;) {
    const auto& nd = tree.node(n);
    if (nd.span == span && nd.named) return n;
    NodeId next = kNoNode;
    for (NodeId c : nd.children) {
      if (tree.node(c).span.contains(span)) {
        next = c;
        break;
      }
    }
    if (next == kNoNode) return kNoNode;
    n = next;
  }
}

std::string rtrim(std::string_view s) {
  std::size_t e = s.size();
  while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r')) {
    --e;
  }
  return std::string(s.substr(0, e));
}

bool matches_test_pattern(const LanguageTemplate& tpl, std::string_view path) {
  return std::any_of(tpl.test_file_patterns.begin(), tpl.test_file_patterns.end(),
                     [&](const std::string& p) { return glob_match(p, path); });
}

EntityRecord fill_signals(EntityRecord r, const SyntaxTree& tree, const CompiledTemplate& tpl,
                          NodeId entity_node, NodeId body_node) {
  r.complexity.clear();
  for (const auto& [signal, query] : tpl.complexity_queries) {
    bool hit = false;
    for (const auto& m : query.matches(tree, entity_node)) {
      for (const auto& [_, id] : m.captures) {
        const auto& span = tree.node(id).span;
        if (id == entity_node || r.body_span.contains(span)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) r.complexity.insert("has_" + signal);
  }
  r.statement_count =
      body_node == kNoNode ? 0 : static_cast<int>(tree.named_children(body_node).size());
  return r;
}

struct Found {
  NodeId node;
  NodeId name;
  NodeId body;
  EntityKind kind;
};

std::vector<Found> find_entities(const SyntaxTree& tree, const CompiledTemplate& tpl) {
  std::map<NodeId, Found> by_node;
  auto collect = [&](const char* key, EntityKind kind) {
    auto it = tpl.entity_queries.find(key);
    if (it == tpl.entity_queries.end()) return;
    for (const auto& m : it->second.matches(tree)) {
      NodeId e = m.capture("entity");
      NodeId n = m.capture("name");
      NodeId b = m.capture("body");
      if (e == kNoNode || n == kNoNode || b == kNoNode) continue;
      auto [pos, inserted] = by_node.try_emplace(e, Found{e, n, b, kind});
      if (!inserted && kind == EntityKind::method) pos->second = Found{e, n, b, kind};
    }
  };
  collect("class", EntityKind::class_);
  collect("function", EntityKind::function);
  collect("method", EntityKind::method);
  std::vector<Found> out;
  for (const auto& [_, f] : by_node) out.push_back(f);
  std::sort(out.begin(), out.end(), [&](const Found& a, const Found& b) {
    const auto& sa = tree.node(a.node).span;
    const auto& sb = tree.node(b.node).span;
    if (sa.start != sb.start) return sa.start < sb.start;
    return sa.end > sb.end;
  });
  return out;
}

std::vector<EntityRecord> build_records(const SyntaxTree& tree, const CompiledTemplate& tpl,
                                        std::string_view path, const std::vector<Found>& found) {
  const bool is_test = matches_test_pattern(tpl.tpl, path);
  std::vector<EntityRecord> out;
  out.reserve(found.size());
  for (std::size_t i = 0; i < found.size(); ++i) {
    const Found& f = found[i];
    EntityRecord r;
    r.kind = f.kind;
    r.name = std::string(tree.text(f.name));
    r.language_id = tpl.tpl.language_id;
    r.file_path = std::string(path);
    r.byte_span = tree.node(f.node).span;
    r.body_span = tree.node(f.body).span;
    r.signature_text = rtrim(tree.source().substr(r.byte_span.start,
                                                  r.body_span.start - r.byte_span.start));
    r.is_test = is_test;
    // Entities are sorted by start, outer first, so every enclosing entity
    // has already been built.
    int parent = -1;
    for (int j = static_cast<int>(i) - 1; j >= 0; --j) {
      if (out[j].byte_span.contains(r.byte_span)) {
        parent = j;
        break;
      }
    }
    if (parent >= 0) {
      r.parent_id = out[parent].entity_id;
      r.nesting_depth = out[parent].nesting_depth + 1;
      r.qualified_name = out[parent].qualified_name + "." + r.name;
    } else {
      r.qualified_name = r.name;
    }
    r.entity_id = r.file_path + "::" + r.qualified_name + "@" + std::to_string(r.byte_span.start);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<EntityRecord> extract_entities(const SyntaxTree& tree, const CompiledTemplate& tpl,
                                           std::string_view path) {
  return build_records(tree, tpl, path, find_entities(tree, tpl));
}

EntityRecord compute_complexity_signals(EntityRecord record, const SyntaxTree& tree,
                                        const CompiledTemplate& tpl) {
  NodeId entity = outermost_with_span(tree, record.byte_span);
  NodeId body = outermost_with_span(tree, record.body_span);
  if (entity == kNoNode) return record;
  // The outermost node with the entity's span may be a wrapper; the entity
  // node itself is the one containing the body as a direct child.
  while (body != kNoNode && tree.node(body).parent != kNoNode &&
         tree.node(tree.node(body).parent).span == record.byte_span) {
    entity = tree.node(body).parent;
    break;
  }
  return fill_signals(std::move(record), tree, tpl, entity, body);
}

FileAnalysis analyze_file(std::string_view path, std::string bytes,
                          const TemplateRegistry& registry, std::uintmax_t max_bytes) {
  FileAnalysis out;
  auto lang = resolve_language(path, registry);
  if (!lang) return out;
  if (bytes.size() > max_bytes) {
    out.status = FileStatus::skipped_too_large;
    return out;
  }
  const CompiledTemplate& tpl = registry.require(*lang);
  SyntaxTree tree = parse_source(std::move(bytes), tpl);
  if (tree.has_error()) {
    out.status = FileStatus::parse_error;
    return out;
  }
  out.status = FileStatus::parsed;
  auto found = find_entities(tree, tpl);
  auto records = build_records(tree, tpl, path, found);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i] = fill_signals(std::move(records[i]), tree, tpl, found[i].node, found[i].body);
  }
  out.entities = std::move(records);
  return out;
}

AnalysisReport analyze_repo(const std::filesystem::path& root, const TemplateRegistry& registry,
                            std::uintmax_t max_bytes) {
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorCode::IoError, root.string(), "not a directory");
  }
  AnalysisReport report;
  report.snapshot_id = fsutil::tree_hash(root);
  for (const auto& rel : fsutil::list_files(root)) {
    auto lang = resolve_language(rel, registry);
    if (!lang) {
      report.file_status[rel] = FileStatus::skipped_no_template;
      continue;
    }
    std::error_code ec;
    auto size = std::filesystem::file_size(root / rel, ec);
    if (!ec && size > max_bytes) {
      report.file_status[rel] = FileStatus::skipped_too_large;
      continue;
    }
    auto fa = analyze_file(rel, fsutil::read_file(root / rel), registry, max_bytes);
    report.file_status[rel] = fa.status;
    for (auto& e : fa.entities) report.entities.push_back(std::move(e));
  }
  return report;
}

json to_json(const EntityRecord& r) {
  json j = json::object();
  j["entity_id"] = r.entity_id;
  j["kind"] = to_string(r.kind);
  j["name"] = r.name;
  j["qualified_name"] = r.qualified_name;
  j["language_id"] = r.language_id;
  j["file_path"] = r.file_path;
  j["byte_span"] = {r.byte_span.start, r.byte_span.end};
  j["body_span"] = {r.body_span.start, r.body_span.end};
  j["signature_text"] = r.signature_text;
  j["nesting_depth"] = r.nesting_depth;
  j["complexity"] = r.complexity;
  j["statement_count"] = r.statement_count;
  j["is_test"] = r.is_test;
  j["parent_id"] = r.parent_id ? json(*r.parent_id) : json(nullptr);
  return j;
}

EntityRecord entity_from_json(const json& j) {
  try {
    EntityRecord r;
    r.entity_id = j.at("entity_id").get<std::string>();
    r.kind = parse_entity_kind(j.at("kind").get<std::string>());
    r.name = j.at("name").get<std::string>();
    r.qualified_name = j.value("qualified_name", r.name);
    r.language_id = j.value("language_id", "");
    r.file_path = j.at("file_path").get<std::string>();
    r.byte_span = {j.at("byte_span").at(0).get<std::size_t>(), j.at("byte_span").at(1).get<std::size_t>()};
    r.body_span = {j.at("body_span").at(0).get<std::size_t>(), j.at("body_span").at(1).get<std::size_t>()};
    r.signature_text = j.at("signature_text").get<std::string>();
    r.nesting_depth = j.at("nesting_depth").get<int>();
    r.complexity = j.at("complexity").get<std::set<std::string>>();
    r.statement_count = j.at("statement_count").get<int>();
    r.is_test = j.at("is_test").get<bool>();
    if (!j.at("parent_id").is_null()) r.parent_id = j.at("parent_id").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "EntityRecord", e.what());
  }
}

std::filesystem::path meta_path_for(const std::filesystem::path& jsonl_path) {
  auto p = jsonl_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_report(const AnalysisReport& report, const std::filesystem::path& jsonl_path) {
  std::string lines;
  for (const auto& e : report.entities) lines += to_json(e).dump() + "\n";
  json meta = json::object();
  meta["snapshot_id"] = report.snapshot_id;
  meta["entity_count"] = report.entities.size();
  json files = json::object();
  for (const auto& [path, st] : report.file_status) files[path] = to_string(st);
  meta["file_status"] = files;
  fsutil::write_file_atomic(jsonl_path, lines);
  fsutil::write_file_atomic(meta_path_for(jsonl_path), meta.dump(2) + "\n");
}

AnalysisReport read_report(const std::filesystem::path& jsonl_path) {
  AnalysisReport report;
  std::istringstream in(fsutil::read_file(jsonl_path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, jsonl_path.string(), e.what());
    }
    report.entities.push_back(entity_from_json(j));
  }
  auto meta_path = meta_path_for(jsonl_path);
  try {
    json meta = json::parse(fsutil::read_file(meta_path));
    report.snapshot_id = meta.at("snapshot_id").get<std::string>();
    for (const auto& [path, st] : meta.at("file_status").items()) {
      report.file_status[path] = parse_file_status(st.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, meta_path.string(), e.what());
  }
  return report;
}

}  // namespace taskforge
