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

#include "taskforge/packaging/packaging.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"

namespace taskforge {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::swe_scale: return "swe_scale";
    case TaskFamily::bug_agent: return "bug_agent";
    case TaskFamily::swe_architect: return "swe_architect";
  }
  return "swe_scale";
}

TaskFamily parse_task_family(std::string_view s) {
  if (s == "swe_scale") return TaskFamily::swe_scale;
  if (s == "bug_agent") return TaskFamily::bug_agent;
  if (s == "swe_architect") return TaskFamily::swe_architect;
  throw Error(ErrorCode::SchemaViolation, "family", std::string(s));
}

std::string TaskRecord::task_id() const {
  if (metadata.contains("task_id") && metadata["task_id"].is_string())
    return metadata["task_id"].get<std::string>();
  return problem_patch.patch_id;
}

namespace {

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

void violation(const char* field, std::string detail) {
  throw Error(ErrorCode::SchemaViolation, field, std::move(detail));
}

}  // namespace

void check_schema(const TaskRecord& r) {
  if (r.repo.location.empty()) violation("repo.location", "empty");
  if (r.repo.snapshot.empty()) violation("repo.snapshot", "empty");
  if (r.problem_patch.diff_text.empty()) violation("problem_patch", "empty");
  if (r.oracle_patch.diff_text.empty()) violation("oracle_patch", "empty");
  if (r.problem_patch.base_snapshot != r.repo.snapshot)
    violation("problem_patch.base_snapshot", "does not match repo.snapshot");
  if (r.problem_statement.generated_by != "template" && r.problem_statement.generated_by != "external")
    violation("problem_statement.generated_by", r.problem_statement.generated_by);
  const Validation& v = r.validation;
  if (r.family == TaskFamily::swe_architect) {
    if (v.hidden_tests.empty()) violation("validation.hidden_tests", "empty");
    if (!v.p2f.empty() || !v.p2p.empty()) violation("validation", "construction records carry hidden tests only");
  } else {
    if (v.p2f.empty()) violation("validation.p2f", "empty");
    if (!v.hidden_tests.empty()) violation("validation", "repair records carry p2f/p2p only");
    std::set<std::string> p2f(v.p2f.begin(), v.p2f.end());
    for (const auto& t : v.p2p)
      if (p2f.contains(t)) violation("validation", "test in both p2f and p2p: " + t);
  }
  if (!r.metadata.is_object()) violation("metadata", "not an object");
}

TaskRecord build_record(TaskFamily family, RepoSpec repo, Patch problem_patch,
                        ProblemStatement problem_statement, Patch oracle_patch,
                        Validation validation, ordered_json metadata) {
  sort_unique(validation.p2f);
  sort_unique(validation.p2p);
  sort_unique(validation.hidden_tests);
  if (metadata.is_null()) metadata = ordered_json::object();
  TaskRecord r{family,           std::move(repo),       std::move(problem_patch),
               std::move(problem_statement), std::move(oracle_patch), std::move(validation),
               std::move(metadata)};
  check_schema(r);
  return r;
}

namespace {

ordered_json patch_json(const Patch& p) {
  ordered_json j;
  j["patch_id"] = p.patch_id;
  j["base_snapshot"] = p.base_snapshot;
  j["files"] = p.files;
  j["diff_text"] = p.diff_text;
  return j;
}

Patch patch_from(const ordered_json& j, const char* field) {
  try {
    Patch p = make_patch(j.at("diff_text").get<std::string>(), j.at("base_snapshot").get<std::string>());
    if (j.contains("patch_id") && j["patch_id"].get<std::string>() != p.patch_id)
      violation(field, "patch_id does not match diff_text");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, field, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaViolation) throw;
    throw Error(ErrorCode::SchemaViolation, field, e.what());
  }
}

}  // namespace

ordered_json to_json(const TaskRecord& r) {
  ordered_json j;
  j["family"] = to_string(r.family);
  j["repo"] = ordered_json{{"location", r.repo.location}, {"snapshot", r.repo.snapshot}};
  j["problem_patch"] = patch_json(r.problem_patch);
  j["problem_statement"] = ordered_json{{"text", r.problem_statement.text},
                                        {"generated_by", r.problem_statement.generated_by}};
  j["oracle_patch"] = patch_json(r.oracle_patch);
  ordered_json v = ordered_json::object();
  if (r.family == TaskFamily::swe_architect) {
    v["hidden_tests"] = r.validation.hidden_tests;
  } else {
    v["p2f"] = r.validation.p2f;
    v["p2p"] = r.validation.p2p;
  }
  j["validation"] = v;
  j["metadata"] = r.metadata;
  return j;
}

TaskRecord record_from_json(const ordered_json& j) {
  static const char* const kFields[] = {"family",       "repo",       "problem_patch", "problem_statement",
                                        "oracle_patch", "validation", "metadata"};
  if (!j.is_object()) violation("record", "not an object");
  for (const char* f : kFields)
    if (!j.contains(f)) violation(f, "missing");
  try {
    TaskRecord r;
    r.family = parse_task_family(j["family"].get<std::string>());
    r.repo = {j["repo"].at("location").get<std::string>(), j["repo"].at("snapshot").get<std::string>()};
    r.problem_patch = patch_from(j["problem_patch"], "problem_patch");
    r.problem_statement = {j["problem_statement"].at("text").get<std::string>(),
                           j["problem_statement"].value("generated_by", "template")};
    r.oracle_patch = patch_from(j["oracle_patch"], "oracle_patch");
    const ordered_json& v = j["validation"];
    r.validation.p2f = v.value("p2f", std::vector<std::string>{});
    r.validation.p2p = v.value("p2p", std::vector<std::string>{});
    r.validation.hidden_tests = v.value("hidden_tests", std::vector<std::string>{});
    r.metadata = j["metadata"];
    check_schema(r);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "record", e.what());
  }
}

std::string serialize(const TaskRecord& r) { return to_json(r).dump(); }

void write_records(const std::vector<TaskRecord>& records, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : records) out += serialize(r) + "\n";
  fsutil::write_file_atomic(path, out);
}

std::vector<TaskRecord> read_records(const std::filesystem::path& path) {
  std::vector<TaskRecord> out;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path.string(), "cannot open");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n), e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

std::vector<std::string> validate_record(const TaskRecord& record, SandboxPool& pool,
                                         const OutcomeVector& baseline) {
  std::vector<std::string> issues;
  try {
    check_schema(record);
  } catch (const Error& e) {
    issues.push_back("schema:" + e.subject());
  }
  const Validation& v = record.validation;
  for (const auto* list : {&v.p2f, &v.p2p, &v.hidden_tests})
    for (const auto& t : *list)
      if (!baseline.outcomes.contains(t)) issues.push_back("unknown-test-id:" + t);

  SandboxSpec spec;
  spec.substrate_ref = record.repo.location;
  spec.repo_snapshot = record.repo.snapshot;
  Sandbox sb = pool.lease(spec);
  try {
    apply_patch(sb.root(), record.problem_patch);
  } catch (const Error&) {
    issues.push_back("patch-unappliable");
    return issues;
  }
  try {
    ApplyResult r = apply_patch(sb.root(), record.oracle_patch);
    if (r.tree_hash != record.repo.snapshot) issues.push_back("oracle-inconsistent");
  } catch (const Error&) {
    issues.push_back("oracle-unappliable");
  }
  return issues;
}

const std::vector<std::string>& default_fix_patterns() {
  static const std::vector<std::string> patterns = {
      R"(\bchange\s+\S+\s+(back\s+)?to\b)",
      R"(\breplace\s+\S+\s+with\b)",
      R"(\bthe\s+(bug|problem|issue|error)\s+is\s+(in|caused|that)\b)",
      R"(\b(root\s+)?cause\s+is\b)",
      R"(\bthe\s+fix\s+is\b)",
      R"(\bto\s+fix\s+(this|it)\b)",
      R"(\bshould\s+be\s+changed\b)",
      R"(\b(revert|undo)\s+(the|this)\s+(change|commit|edit)\b)",
      R"(\bon\s+line\s+\d+\b)",
  };
  return patterns;
}

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Every occurrence of `needle` bounded by non-token characters.
std::vector<std::size_t> token_hits(std::string_view hay, std::string_view needle, bool path_like) {
  std::vector<std::size_t> hits;
  if (needle.empty()) return hits;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1)) {
    std::size_t end = pos + needle.size();
    char before = pos ? hay[pos - 1] : ' ';
    char after = end < hay.size() ? hay[end] : ' ';
    bool left_ok = !ident_char(before) && !(path_like && (before == '/' || before == '.' || before == '-'));
    bool right_ok = !ident_char(after);
    if (path_like && after == '/') right_ok = false;
    if (path_like && after == '.' && end + 1 < hay.size() && ident_char(hay[end + 1])) right_ok = false;
    if (left_ok && right_ok) hits.push_back(pos);
  }
  return hits;
}

std::string excerpt_at(std::string_view text, std::size_t pos) {
  std::size_t a = text.rfind('\n', pos);
  a = a == std::string_view::npos ? 0 : a + 1;
  std::size_t b = text.find('\n', pos);
  if (b == std::string_view::npos) b = text.size();
  std::string line(text.substr(a, b - a));
  if (line.size() > 160) line = line.substr(0, 160);
  return line;
}

}  // namespace

LeakageVerdict leakage_filter(std::string_view statement, const CausalFingerprint& fingerprint,
                              const std::vector<std::string>& allowed_test_ids,
                              const std::vector<std::string>& fix_patterns) {
  LeakageVerdict verdict;
  if (statement.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    verdict.violations.push_back({"empty", ""});
    return verdict;
  }
  std::string masked(statement);
  std::vector<std::string> allowed(allowed_test_ids);
  for (const auto& id : allowed_test_ids) {
    auto sep = id.rfind("::");
    if (sep != std::string::npos) allowed.push_back(id.substr(sep + 2));
  }
  std::sort(allowed.begin(), allowed.end(),
            [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  for (const auto& a : allowed)
    for (std::size_t pos : token_hits(masked, a, false)) std::fill_n(masked.begin() + pos, a.size(), ' ');

  for (const auto& ident : fingerprint.identifiers) {
    auto hits = token_hits(masked, ident, false);
    if (!hits.empty()) verdict.violations.push_back({"identifier", excerpt_at(statement, hits.front())});
  }
  for (const auto& file : fingerprint.files) {
    std::set<std::string> forms{file};
    auto slash = file.rfind('/');
    if (slash != std::string::npos) forms.insert(file.substr(slash + 1));
    for (const auto& f : forms) {
      auto hits = token_hits(masked, f, true);
      if (!hits.empty()) {
        verdict.violations.push_back({"file", excerpt_at(statement, hits.front())});
        break;
      }
    }
  }
  std::string text(statement);
  for (const auto& p : fix_patterns) {
    std::regex re(p, std::regex::ECMAScript | std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, re))
      verdict.violations.push_back({"fix_suggestion", excerpt_at(text, m.position(0))});
  }
  verdict.accepted = verdict.violations.empty();
  return verdict;
}

namespace {

// First non-blank line of a failure message; for a Python traceback, the
// exception line at its end.
std::string symptom_line(std::string_view msg) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < msg.size();) {
    std::size_t nl = msg.find('\n', pos);
    std::string_view l = msg.substr(pos, nl == std::string_view::npos ? msg.npos : nl - pos);
    pos = nl == std::string_view::npos ? msg.size() : nl + 1;
    auto a = l.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) continue;
    l.remove_prefix(a);
    while (!l.empty() && (l.back() == ' ' || l.back() == '\r')) l.remove_suffix(1);
    lines.push_back(l);
  }
  if (lines.empty()) return {};
  std::string_view pick = lines.front().starts_with("Traceback") ? lines.back() : lines.front();
  return std::string(pick.substr(0, 200));
}

}  // namespace

ProblemStatement render_problem_statement(const TestPartition& partition,
                                          const std::vector<TestOutcome>& candidate_outcomes,
                                          const CausalFingerprint& fingerprint) {
  std::vector<std::string> allowed(partition.p2f.begin(), partition.p2f.end());
  std::map<std::string, const TestOutcome*> by_id;
  for (const auto& o : candidate_outcomes) by_id[o.test_id] = &o;

  std::string text = "Tests that used to pass now fail (" + std::to_string(partition.p2f.size()) + "):\n";
  for (const auto& id : partition.p2f) {
    text += "- " + id;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      text += " (no result reported)";
    } else {
      std::string line = symptom_line(it->second->message);
      if (!line.empty() && leakage_filter(line, fingerprint, allowed).accepted) text += ": " + line;
    }
    text += "\n";
  }
  if (!partition.p2p.empty())
    text += std::to_string(partition.p2p.size()) + " other tests still pass.\n";
  return {text, "template"};
}

ReplayReport replay_record(const TaskRecord& record, SandboxPool& pool, const SandboxSpec& spec,
                           const VerifierMeta& meta, const OutcomeVector& baseline) {
  ReplayReport rep;
  OutcomeVector broken = run_candidate(pool, spec, record.problem_patch, meta);
  OutcomeVector fixed =
      run_candidate(pool, spec, {&record.problem_patch, &record.oracle_patch}, meta);
  auto passes = [](const OutcomeVector& v, const std::string& id) {
    auto it = v.outcomes.find(id);
    return it != v.outcomes.end() && it->second == TestStatus::pass;
  };
  const Validation& val = record.validation;
  if (record.family == TaskFamily::swe_architect) {
    rep.bug_reproduced = std::any_of(val.hidden_tests.begin(), val.hidden_tests.end(),
                                     [&](const auto& t) { return !passes(broken, t); });
    rep.oracle_restores = std::all_of(val.hidden_tests.begin(), val.hidden_tests.end(),
                                      [&](const auto& t) { return passes(fixed, t); });
    return rep;
  }
  TestPartition part = partition_outcomes(baseline, broken);
  rep.bug_reproduced = part.p2f == std::set<std::string>(val.p2f.begin(), val.p2f.end());
  rep.oracle_restores =
      std::all_of(val.p2f.begin(), val.p2f.end(), [&](const auto& t) { return passes(fixed, t); }) &&
      std::all_of(val.p2p.begin(), val.p2p.end(), [&](const auto& t) { return passes(fixed, t); });
  return rep;
}

}  // namespace taskforge
