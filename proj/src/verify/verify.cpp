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

#include "taskforge/verify/verify.hpp"

#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <yaml-cpp/yaml.h>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"

namespace taskforge {

using nlohmann::json;
namespace pt = boost::property_tree;

std::string_view to_string(TestStatus s) {
  switch (s) {
    case TestStatus::pass: return "pass";
    case TestStatus::fail: return "fail";
    case TestStatus::error: return "error";
    case TestStatus::skip: return "skip";
  }
  return "error";
}

TestStatus parse_test_status(std::string_view s) {
  if (s == "pass") return TestStatus::pass;
  if (s == "fail") return TestStatus::fail;
  if (s == "skip") return TestStatus::skip;
  return TestStatus::error;
}

std::string_view to_string(ArtifactFormat f) {
  switch (f) {
    case ArtifactFormat::junit_xml: return "junit_xml";
    case ArtifactFormat::jsonl_stream: return "jsonl_stream";
    case ArtifactFormat::standard_result: return "standard_result";
  }
  return "standard_result";
}

ArtifactFormat parse_artifact_format(std::string_view s) {
  if (s == "junit_xml") return ArtifactFormat::junit_xml;
  if (s == "jsonl_stream") return ArtifactFormat::jsonl_stream;
  if (s == "standard_result") return ArtifactFormat::standard_result;
  throw Error(ErrorCode::ConfigError, "format", "unknown artifact format " + std::string(s));
}

std::string_view to_string(FailureClass c) {
  switch (c) {
    case FailureClass::env_failure: return "env_failure";
    case FailureClass::test_failure: return "test_failure";
    case FailureClass::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(ReadinessReport::Classification c) {
  switch (c) {
    case ReadinessReport::Classification::ready: return "ready";
    case ReadinessReport::Classification::env_failure: return "env_failure";
    case ReadinessReport::Classification::harness_failure: return "harness_failure";
  }
  return "harness_failure";
}

namespace {

// Cuts at a UTF-8 boundary.
std::string truncate_message(std::string s) {
  if (s.size() <= kMaxMessageBytes) return s;
  std::size_t n = kMaxMessageBytes;
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  s.resize(n);
  return s;
}

class OutcomeList {
 public:
  void add(TestOutcome o) {
    if (o.test_id.empty()) throw Error(ErrorCode::MalformedArtifact, "test", "empty test id");
    if (!seen_.insert(o.test_id).second) throw Error(ErrorCode::DuplicateTestId, o.test_id);
    o.message = truncate_message(std::move(o.message));
    out_.push_back(std::move(o));
  }
  std::vector<TestOutcome> take() { return std::move(out_); }

 private:
  std::set<std::string> seen_;
  std::vector<TestOutcome> out_;
};

double to_seconds(const std::string& s) {
  if (s.empty()) return 0.0;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedArtifact, "time", "not a number: " + s);
  }
}

void walk_junit(const pt::ptree& node, const std::string& suite, OutcomeList& out) {
  for (const auto& [tag, child] : node) {
    if (tag == "testsuite" || tag == "testsuites") {
      walk_junit(child, child.get("<xmlattr>.name", suite), out);
    } else if (tag == "testcase") {
      auto name = child.get_optional<std::string>("<xmlattr>.name");
      if (!name) throw Error(ErrorCode::MalformedArtifact, "testcase", "missing name");
      std::string cls = child.get("<xmlattr>.classname", suite);
      TestOutcome o;
      o.test_id = cls.empty() ? *name : cls + "::" + *name;
      o.duration = to_seconds(child.get("<xmlattr>.time", ""));
      o.status = TestStatus::pass;
      for (const auto& [ctag, detail] : child) {
        TestStatus st;
        if (ctag == "failure") st = TestStatus::fail;
        else if (ctag == "error") st = TestStatus::error;
        else if (ctag == "skipped") st = TestStatus::skip;
        else continue;
        o.status = st;
        o.message = detail.get("<xmlattr>.message", "");
        std::string text = detail.get_value<std::string>();
        if (!text.empty()) o.message += (o.message.empty() ? "" : "\n") + text;
        break;
      }
      out.add(std::move(o));
    }
  }
}

std::vector<TestOutcome> parse_junit(std::string_view artifact) {
  pt::ptree doc;
  std::istringstream in{std::string(artifact)};
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedArtifact, "line " + std::to_string(e.line()), e.message());
  }
  if (doc.size() != 1) throw Error(ErrorCode::MalformedArtifact, "document", "expected one root");
  const auto& [root_tag, root] = doc.front();
  if (root_tag != "testsuites" && root_tag != "testsuite")
    throw Error(ErrorCode::MalformedArtifact, "document", "unexpected root <" + root_tag + ">");
  OutcomeList out;
  walk_junit(doc, "", out);
  return out.take();
}

json parse_json_at(std::string_view text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedArtifact, where + "offset " + std::to_string(e.byte), e.what());
  }
}

std::vector<TestOutcome> parse_jsonl(std::string_view artifact) {
  struct Pending {
    std::size_t order;
    std::optional<TestStatus> status;
    double duration = 0.0;
    std::string output;
  };
  std::map<std::string, Pending> tests;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < artifact.size()) {
    std::size_t nl = artifact.find('\n', pos);
    std::string_view line = artifact.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? artifact.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::string where = "line " + std::to_string(line_no) + " ";
    json ev = parse_json_at(line, where);
    if (!ev.is_object() || !ev.contains("Action") || !ev["Action"].is_string())
      throw Error(ErrorCode::MalformedArtifact, "line " + std::to_string(line_no), "missing Action");
    if (!ev.contains("Test") || !ev["Test"].is_string()) continue;  // package-level event
    std::string pkg = ev.value("Package", "");
    std::string name = ev["Test"].get<std::string>();
    std::string id = pkg.empty() ? name : pkg + "::" + name;
    auto it = tests.try_emplace(id, Pending{tests.size(), {}, 0.0, {}}).first;
    Pending& p = it->second;
    std::string action = ev["Action"].get<std::string>();
    if (action == "run" || action == "pause" || action == "cont" || action == "start") continue;
    if (action == "output") {
      if (ev.contains("Output") && ev["Output"].is_string()) p.output += ev["Output"].get<std::string>();
      continue;
    }
    if (p.status) throw Error(ErrorCode::DuplicateTestId, id);
    p.status = parse_test_status(action == "bench" ? "pass" : action);
    if (ev.contains("Elapsed") && ev["Elapsed"].is_number()) p.duration = ev["Elapsed"].get<double>();
  }
  std::vector<std::pair<std::size_t, TestOutcome>> ordered;
  for (auto& [id, p] : tests) {
    TestOutcome o{id, p.status.value_or(TestStatus::error), p.duration, std::move(p.output)};
    ordered.emplace_back(p.order, std::move(o));
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  OutcomeList out;
  for (auto& [order, o] : ordered) out.add(std::move(o));
  return out.take();
}

const json& field(const json& obj, const char* key, json::value_t type, const std::string& where) {
  auto it = obj.find(key);
  bool ok = it != obj.end() &&
            (it->type() == type ||
             (type == json::value_t::number_float && it->is_number()) ||
             (type == json::value_t::number_integer && it->is_number_integer()));
  if (!ok) throw Error(ErrorCode::MalformedArtifact, where + key, "missing or mistyped");
  return *it;
}

std::vector<TestOutcome> parse_standard(std::string_view artifact) {
  json doc = parse_json_at(artifact, "");
  if (!doc.is_object()) throw Error(ErrorCode::MalformedArtifact, "document", "not an object");
  if (field(doc, "schema_version", json::value_t::number_integer, "") != 1)
    throw Error(ErrorCode::MalformedArtifact, "schema_version", "unsupported version");
  field(doc, "exit_code", json::value_t::number_integer, "");
  field(doc, "duration_s", json::value_t::number_float, "");
  const json& tests = field(doc, "tests", json::value_t::array, "");
  OutcomeList out;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    std::string where = "tests[" + std::to_string(i) + "].";
    const json& t = tests[i];
    if (!t.is_object()) throw Error(ErrorCode::MalformedArtifact, where, "not an object");
    TestOutcome o;
    o.test_id = field(t, "id", json::value_t::string, where).get<std::string>();
    o.status = parse_test_status(field(t, "status", json::value_t::string, where).get<std::string>());
    o.duration = field(t, "duration_s", json::value_t::number_float, where).get<double>();
    o.message = field(t, "message", json::value_t::string, where).get<std::string>();
    out.add(std::move(o));
  }
  return out.take();
}

}  // namespace

std::vector<TestOutcome> parse_test_report(std::string_view artifact, ArtifactFormat format) {
  switch (format) {
    case ArtifactFormat::junit_xml: return parse_junit(artifact);
    case ArtifactFormat::jsonl_stream: return parse_jsonl(artifact);
    case ArtifactFormat::standard_result: return parse_standard(artifact);
  }
  return {};
}

// Written by hand: nlohmann objects sort their keys, the schema fixes the
// order.
std::string render_standard_result(const std::vector<TestOutcome>& tests, int exit_code,
                                   double duration_s) {
  std::string s = "{\"schema_version\": 1, \"exit_code\": " + std::to_string(exit_code) +
                  ", \"duration_s\": " + json(duration_s).dump() + ", \"tests\": [";
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const TestOutcome& t = tests[i];
    if (i) s += ", ";
    s += "{\"id\": " + json(t.test_id).dump() + ", \"status\": " + json(to_string(t.status)).dump() +
         ", \"duration_s\": " + json(t.duration).dump() +
         ", \"message\": " + json(t.message).dump() + "}";
  }
  return s + "]}\n";
}

const std::vector<FailureSignature>& default_signatures() {
  static const std::vector<FailureSignature> sigs = {
      {R"(ModuleNotFoundError|No module named)", FailureClass::env_failure},
      {R"(ImportError: )", FailureClass::env_failure},
      {R"(Cannot find module)", FailureClass::env_failure},
      {R"(command not found|: not found)", FailureClass::env_failure},
      {R"(error while loading shared libraries)", FailureClass::env_failure},
      {R"(can't open file|No such file or directory)", FailureClass::env_failure},
      {R"(AssertionError|AssertionFailedError|assert(ion)? failed)", FailureClass::test_failure},
      {R"(Expected .* (to|but)|expected .* got)", FailureClass::test_failure},
  };
  return sigs;
}

VerifierMeta parse_verifier_meta(std::string_view yaml_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, "verifier", e.what());
  }
  if (!doc.IsMap()) throw Error(ErrorCode::ConfigError, "verifier", "document is not a mapping");
  VerifierMeta m;
  try {
    YAML::Node cmd = doc["command"];
    if (!cmd || !cmd.IsSequence() || cmd.size() == 0)
      throw Error(ErrorCode::ConfigError, "command", "expected a non-empty list");
    for (const auto& a : cmd) m.command.push_back(a.as<std::string>());
    if (YAML::Node list = doc["artifacts"]) {
      if (!list.IsSequence()) throw Error(ErrorCode::ConfigError, "artifacts", "expected a list");
      for (const auto& a : list) {
        if (!a["path"] || !a["format"])
          throw Error(ErrorCode::ConfigError, "artifacts", "entries need path and format");
        m.artifacts.push_back({a["path"].as<std::string>(),
                               parse_artifact_format(a["format"].as<std::string>())});
      }
    } else if (doc["artifact_path"]) {
      std::string fmt = doc["format"] ? doc["format"].as<std::string>() : "standard_result";
      m.artifacts.push_back({doc["artifact_path"].as<std::string>(), parse_artifact_format(fmt)});
    }
    if (m.artifacts.empty()) throw Error(ErrorCode::ConfigError, "artifact_path", "no artifact declared");
    if (YAML::Node t = doc["wall_timeout"]) m.wall_timeout = t.as<double>();
    if (YAML::Node sigs = doc["signatures"]) {
      for (const auto& s : sigs) {
        std::string cls = s["class"].as<std::string>();
        FailureClass c = cls == "env_failure"    ? FailureClass::env_failure
                         : cls == "test_failure" ? FailureClass::test_failure
                                                 : FailureClass::unknown;
        m.signatures.push_back({s["pattern"].as<std::string>(), c});
      }
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, "verifier", e.what());
  }
  for (const auto& s : m.signatures) {
    try {
      std::regex re(s.pattern);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::ConfigError, "signatures", s.pattern + ": " + e.what());
    }
  }
  return m;
}

VerifierMeta load_verifier_meta(const std::filesystem::path& path) {
  return parse_verifier_meta(fsutil::read_file(path));
}

SandboxSpec with_verifier_limits(SandboxSpec spec, const VerifierMeta& meta) {
  if (meta.wall_timeout) spec.wall_timeout = *meta.wall_timeout;
  return spec;
}

ClassifiedFailure classify_failure(const ExecutionResult& result,
                                   const std::vector<FailureSignature>& signatures) {
  for (const auto& sig : signatures) {
    std::regex re(sig.pattern);
    if (std::regex_search(result.stderr_text, re) || std::regex_search(result.stdout_text, re))
      return {sig.cls, sig.pattern};
  }
  return {FailureClass::unknown, ""};
}

std::vector<TestOutcome> collect_outcomes(const ExecutionResult& result, const VerifierMeta& meta) {
  std::vector<TestOutcome> all;
  std::set<std::string> seen;
  for (const auto& a : meta.artifacts) {
    auto it = result.artifacts.find(a.path);
    if (it == result.artifacts.end()) throw Error(ErrorCode::MalformedArtifact, a.path, "missing");
    for (auto& o : parse_test_report(it->second, a.format)) {
      if (!seen.insert(o.test_id).second) throw Error(ErrorCode::DuplicateTestId, o.test_id);
      all.push_back(std::move(o));
    }
  }
  return all;
}

OutcomeVector outcome_vector(const ExecutionResult& result, const VerifierMeta& meta,
                             const std::string& substrate_ref) {
  OutcomeVector v;
  v.run_meta.exit_code = result.exit_code;
  v.run_meta.duration = result.duration;
  v.run_meta.substrate_ref = substrate_ref;
  v.run_meta.timed_out = result.timed_out;
  try {
    for (const auto& o : collect_outcomes(result, meta)) v.outcomes[o.test_id] = o.status;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedArtifact && e.code() != ErrorCode::DuplicateTestId) throw;
    v.outcomes.clear();
    v.run_meta.artifact_valid = false;
  }
  return v;
}

json to_json(const OutcomeVector& v) {
  json outcomes = json::object();
  for (const auto& [id, st] : v.outcomes) outcomes[id] = to_string(st);
  json meta = json::object();
  meta["exit_code"] = v.run_meta.exit_code ? json(*v.run_meta.exit_code) : json(nullptr);
  meta["duration"] = v.run_meta.duration;
  meta["substrate_ref"] = v.run_meta.substrate_ref;
  meta["timed_out"] = v.run_meta.timed_out;
  meta["artifact_valid"] = v.run_meta.artifact_valid;
  meta["flaky"] = v.run_meta.flaky;
  return json{{"outcomes", outcomes}, {"run_meta", meta}};
}

OutcomeVector outcome_vector_from_json(const json& j) {
  OutcomeVector v;
  for (const auto& [id, st] : j.at("outcomes").items())
    v.outcomes[id] = parse_test_status(st.get<std::string>());
  const json& m = j.at("run_meta");
  if (!m.at("exit_code").is_null()) v.run_meta.exit_code = m["exit_code"].get<int>();
  v.run_meta.duration = m.at("duration").get<double>();
  v.run_meta.substrate_ref = m.at("substrate_ref").get<std::string>();
  v.run_meta.timed_out = m.value("timed_out", false);
  v.run_meta.artifact_valid = m.value("artifact_valid", true);
  v.run_meta.flaky = m.value("flaky", std::vector<std::string>{});
  return v;
}

TestPartition partition_outcomes(const OutcomeVector& base, const OutcomeVector& cand) {
  TestPartition p;
  for (const auto& [id, b] : base.outcomes) {
    if (b == TestStatus::skip) continue;
    auto it = cand.outcomes.find(id);
    TestStatus c = it == cand.outcomes.end() ? TestStatus::error : it->second;
    if (c == TestStatus::skip) continue;
    if (b == TestStatus::pass) (c == TestStatus::pass ? p.p2p : p.p2f).insert(id);
    else (c == TestStatus::pass ? p.f2p : p.f2f).insert(id);
  }
  return p;
}

namespace {

const std::vector<FailureSignature>& signatures_of(const VerifierMeta& meta) {
  return meta.signatures.empty() ? default_signatures() : meta.signatures;
}

void archive(const std::filesystem::path& dir, const ExecutionResult* r, const ReadinessReport& rep) {
  std::filesystem::create_directories(dir);
  if (r) {
    fsutil::write_file(dir / "stdout.txt", r->stdout_text);
    fsutil::write_file(dir / "stderr.txt", r->stderr_text);
  }
  json j{{"classification", to_string(rep.classification)},
         {"evidence", rep.evidence},
         {"artifact_valid", rep.artifact_valid}};
  fsutil::write_file(dir / "readiness.json", j.dump(2) + "\n");
}

}  // namespace

ReadinessReport readiness_gate(SandboxPool& pool, const SandboxSpec& spec, const VerifierMeta& meta,
                               const std::optional<std::filesystem::path>& log_dir) {
  using C = ReadinessReport::Classification;
  ReadinessReport rep;
  ExecutionResult r;
  try {
    r = with_candidate(pool, with_verifier_limits(spec, meta), nullptr, meta.command);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SpawnFailed || e.detail() != "ENOENT") throw;
    rep.classification = C::env_failure;
    rep.evidence = "command not found: " + e.subject();
    if (log_dir) archive(*log_dir, nullptr, rep);
    return rep;
  }
  std::string artifact_error;
  try {
    collect_outcomes(r, meta);
    rep.artifact_valid = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedArtifact && e.code() != ErrorCode::DuplicateTestId) throw;
    artifact_error = e.what();
  }
  ClassifiedFailure cf = classify_failure(r, signatures_of(meta));
  if (r.timed_out) {
    rep.classification = C::harness_failure;
    rep.evidence = "timeout";
  } else if (cf.cls == FailureClass::env_failure) {
    rep.classification = C::env_failure;
    rep.evidence = cf.evidence;
  } else if (!rep.artifact_valid) {
    rep.classification = C::harness_failure;
    rep.evidence = artifact_error;
  } else {
    rep.classification = C::ready;
    rep.evidence = cf.evidence;
  }
  if (log_dir) archive(*log_dir, &r, rep);
  return rep;
}

OutcomeVector run_baseline(SandboxPool& pool, const SandboxSpec& spec, const VerifierMeta& meta) {
  SandboxSpec s = with_verifier_limits(spec, meta);
  auto once = [&] {
    ExecutionResult r;
    try {
      r = with_candidate(pool, s, nullptr, meta.command);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SpawnFailed && e.detail() == "ENOENT")
        throw Error(ErrorCode::NotReady, spec.substrate_ref, e.what());
      throw;
    }
    if (r.timed_out) throw Error(ErrorCode::NotReady, spec.substrate_ref, "verifier timed out");
    ClassifiedFailure cf = classify_failure(r, signatures_of(meta));
    if (cf.cls == FailureClass::env_failure)
      throw Error(ErrorCode::NotReady, spec.substrate_ref, "env failure: " + cf.evidence);
    OutcomeVector v = outcome_vector(r, meta, spec.substrate_ref);
    if (!v.run_meta.artifact_valid)
      throw Error(ErrorCode::NotReady, spec.substrate_ref, "no valid test report");
    return v;
  };
  OutcomeVector first = once();
  OutcomeVector second = once();
  OutcomeVector out;
  out.run_meta = first.run_meta;
  std::set<std::string> ids;
  for (const auto& [id, st] : first.outcomes) ids.insert(id);
  for (const auto& [id, st] : second.outcomes) ids.insert(id);
  for (const auto& id : ids) {
    auto a = first.outcomes.find(id);
    auto b = second.outcomes.find(id);
    if (a != first.outcomes.end() && b != second.outcomes.end() && a->second == b->second)
      out.outcomes[id] = a->second;
    else
      out.run_meta.flaky.push_back(id);
  }
  return out;
}

OutcomeVector run_candidate(SandboxPool& pool, const SandboxSpec& spec,
                            const std::vector<const Patch*>& patches, const VerifierMeta& meta,
                            ExecutionResult* raw) {
  ExecutionResult r = with_patches(pool, with_verifier_limits(spec, meta), patches, meta.command);
  OutcomeVector v = outcome_vector(r, meta, spec.substrate_ref);
  if (raw) *raw = std::move(r);
  return v;
}

}  // namespace taskforge
