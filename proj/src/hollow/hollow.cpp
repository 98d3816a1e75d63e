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

#include "taskforge/hollow/hollow.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"

namespace taskforge {

using nlohmann::json;

namespace {

// "path::qualified" (no offset) -> entity ids with that prefix.
std::map<std::string, std::vector<std::string>> short_ids(const AnalysisReport& report) {
  std::map<std::string, std::vector<std::string>> m;
  for (const auto& e : report.entities) m[e.file_path + "::" + e.qualified_name].push_back(e.entity_id);
  return m;
}

}  // namespace

CoverageMap parse_coverage(std::string_view jsonl, const AnalysisReport& report) {
  auto by_short = short_ids(report);
  CoverageMap cov;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::string where = "coverage line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
      std::string test = j.at("test").get<std::string>();
      if (test.find("::") == std::string::npos)
        throw Error(ErrorCode::SchemaViolation, where, "test id is not suite::case: " + test);
      auto& covered = cov.edges[test];
      for (const auto& id : j.at("covers")) {
        std::string eid = id.get<std::string>();
        if (report.find(eid)) {
          covered.insert(eid);
          continue;
        }
        auto it = by_short.find(eid);
        if (it == by_short.end() || it->second.size() != 1)
          throw Error(ErrorCode::DanglingEntityId, eid, where);
        covered.insert(it->second.front());
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, where, e.what());
    }
  }
  return cov;
}

CoverageMap load_coverage(const std::filesystem::path& path, const AnalysisReport& report) {
  return parse_coverage(fsutil::read_file(path), report);
}

std::vector<ScopePackage> mine_scope(const CoverageMap& coverage, const AnalysisReport& report,
                                     const ScopeParams& params) {
  // Union-find over tests (0..T-1) and non-test entities (T..).
  std::vector<std::string> tests;
  std::map<std::string, std::size_t> entity_index;
  std::vector<std::string> entities;
  for (const auto& [test, covered] : coverage.edges) {
    tests.push_back(test);
    for (const auto& eid : covered) {
      const EntityRecord* e = report.find(eid);
      if (!e) throw Error(ErrorCode::DanglingEntityId, eid, test);
      if (!e->is_test && entity_index.emplace(eid, entities.size()).second) entities.push_back(eid);
    }
  }
  const std::size_t T = tests.size();
  std::vector<std::size_t> parent(T + entities.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t t = 0; t < T; ++t)
    for (const auto& eid : coverage.edges.at(tests[t])) {
      auto it = entity_index.find(eid);
      if (it != entity_index.end()) parent[find(t)] = find(T + it->second);
    }

  struct Cluster {
    std::set<std::string> tests, entities;
    std::size_t internal = 0, leaving = 0;
  };
  std::map<std::size_t, Cluster> clusters;
  for (std::size_t t = 0; t < T; ++t) {
    Cluster& c = clusters[find(t)];
    c.tests.insert(tests[t]);
    for (const auto& eid : coverage.edges.at(tests[t])) {
      if (entity_index.contains(eid)) {
        c.entities.insert(eid);
        ++c.internal;
      } else {
        ++c.leaving;
      }
    }
  }

  std::vector<ScopePackage> out;
  for (auto& [root, c] : clusters) {
    if (c.entities.size() < params.min_entities || c.entities.empty()) continue;
    ScopePackage p;
    p.target_entities.assign(c.entities.begin(), c.entities.end());
    // Connected to at least one entity, so every test covers a target.
    p.mapped_tests.assign(c.tests.begin(), c.tests.end());
    p.cohesion = static_cast<double>(c.internal) /
                 static_cast<double>(p.mapped_tests.size() * p.target_entities.size());
    p.isolation = 1.0 - static_cast<double>(c.leaving) / static_cast<double>(c.internal + c.leaving);
    if (p.isolation < params.min_isolation) continue;
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const ScopePackage& a, const ScopePackage& b) {
    if (a.isolation != b.isolation) return a.isolation > b.isolation;
    if (a.target_entities.size() != b.target_entities.size())
      return a.target_entities.size() > b.target_entities.size();
    return a.target_entities.front() < b.target_entities.front();
  });
  return out;
}

namespace {

std::string line_indent(std::string_view src, std::size_t pos) {
  std::size_t bol = src.rfind('\n', pos == 0 ? 0 : pos - 1);
  bol = (bol == std::string_view::npos || pos == 0) ? 0 : bol + 1;
  std::size_t end = bol;
  while (end < src.size() && (src[end] == ' ' || src[end] == '\t')) ++end;
  return std::string(src.substr(bol, end - bol));
}

}  // namespace

HollowPlan plan_hollow(const ScopePackage& scope, const AnalysisReport& report,
                       const TemplateRegistry& registry, const FileReader& read) {
  std::vector<const EntityRecord*> picked;
  for (const auto& id : scope.target_entities) {
    const EntityRecord* e = report.find(id);
    if (!e) throw Error(ErrorCode::DanglingEntityId, id);
    if (e->kind != EntityKind::class_) {
      picked.push_back(e);
      continue;
    }
    for (const auto& m : report.entities)
      if (m.parent_id == e->entity_id && m.kind == EntityKind::method) picked.push_back(&m);
  }
  std::sort(picked.begin(), picked.end(), [](const EntityRecord* a, const EntityRecord* b) {
    if (a->file_path != b->file_path) return a->file_path < b->file_path;
    if (a->body_span.start != b->body_span.start) return a->body_span.start < b->body_span.start;
    return a->body_span.end > b->body_span.end;
  });
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

  HollowPlan plan;
  plan.snapshot_id = report.snapshot_id;
  std::string current_file;
  std::string src;
  for (const EntityRecord* e : picked) {
    if (e->body_span.end <= e->body_span.start) continue;
    if (!plan.entries.empty() && plan.entries.back().file_path == e->file_path &&
        e->body_span.start < plan.entries.back().body_span.end)
      continue;  // inside a body already being hollowed
    const CompiledTemplate& tpl = registry.require(e->language_id);
    if (e->file_path != current_file) {
      src = read(e->file_path);
      current_file = e->file_path;
    }
    plan.entries.push_back({e->entity_id, e->file_path, e->body_span,
                            tpl.render_stub(line_indent(src, e->body_span.start))});
  }
  return plan;
}

HollowPatches emit_patches(const std::filesystem::path& workdir, const HollowPlan& plan) {
  fsutil::Overlay overlay;
  std::map<std::string, std::vector<const HollowEntry*>> by_file;
  for (const auto& e : plan.entries) by_file[e.file_path].push_back(&e);
  for (const auto& [file, entries] : by_file) {
    std::string text = fsutil::read_file(workdir / file);
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      const HollowEntry& e = **it;
      if (e.body_span.end > text.size())
        throw Error(ErrorCode::SpanOutOfBounds, e.entity_id);
      text.replace(e.body_span.start, e.body_span.end - e.body_span.start, e.stub_text);
    }
    overlay[file] = std::move(text);
  }
  HollowPatches out;
  out.hollow_patch = diff_overlay(workdir, overlay, plan.snapshot_id);
  out.golden_patch = reversed(out.hollow_patch, fsutil::tree_hash(workdir, overlay));
  return out;
}

bool verify_solvability(SandboxPool& pool, const SandboxSpec& spec, const HollowPatches& patches,
                        const std::vector<std::string>& hidden_tests, const VerifierMeta& meta) {
  OutcomeVector v =
      run_candidate(pool, spec, {&patches.hollow_patch, &patches.golden_patch}, meta);
  return std::all_of(hidden_tests.begin(), hidden_tests.end(), [&](const std::string& t) {
    auto it = v.outcomes.find(t);
    return it != v.outcomes.end() && it->second == TestStatus::pass;
  });
}

}  // namespace taskforge
