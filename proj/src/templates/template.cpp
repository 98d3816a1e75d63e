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

#include "taskforge/templates/template.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>

#include "taskforge/common/error.hpp"
#include "taskforge/common/fs.hpp"

namespace taskforge {

namespace {

const std::vector<std::string>& builtin_preconditions() {
  static const std::vector<std::string> names = {"min_statements_2", "min_members_2",
                                                 "min_methods_2", "is_class", "is_callable"};
  return names;
}

// Captures each modifier's transform reads, beyond @target.
std::vector<std::string> required_captures(ModifierId id) {
  switch (id) {
    case ModifierId::op_change:
    case ModifierId::op_flip:
      return {"target", "op"};
    case ModifierId::operand_swap:
      return {"target", "left", "right"};
    case ModifierId::chain_break:
      return {"target", "left"};
    case ModifierId::branch_swap:
      return {"target", "then", "else"};
    case ModifierId::wrapper_unwrap:
      return {"target", "body"};
    case ModifierId::base_drop:
      return {"target", "bases"};
    default:
      return {"target"};
  }
}

std::string scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<std::string>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, key, e.what());
  }
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& key) {
  std::vector<std::string> out;
  if (!node) return out;
  if (!node.IsSequence()) throw Error(ErrorCode::ConfigError, key, "expected a list");
  for (const auto& item : node) out.push_back(scalar(item, key));
  return out;
}

std::map<std::string, std::string> string_map(const YAML::Node& node, const std::string& key) {
  std::map<std::string, std::string> out;
  if (!node) return out;
  if (!node.IsMap()) throw Error(ErrorCode::ConfigError, key, "expected a mapping");
  for (const auto& kv : node) {
    out[scalar(kv.first, key)] = scalar(kv.second, key + "." + kv.first.Scalar());
  }
  return out;
}

const YAML::Node required(const YAML::Node& doc, const std::string& key) {
  YAML::Node n = doc[key];
  if (!n || n.IsNull()) throw Error(ErrorCode::MissingKey, key);
  return n;
}

void check_duplicate_keys(const YAML::Node& rules) {
  // yaml-cpp keeps repeated mapping keys, so duplicates are visible here.
  std::set<std::string> seen;
  for (const auto& kv : rules) {
    std::string k = kv.first.Scalar();
    if (!seen.insert(k).second) throw Error(ErrorCode::DuplicateModifierRule, k);
  }
}

}  // namespace

LanguageTemplate load_template(std::string_view yaml_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, "template", e.what());
  }
  if (!doc.IsMap()) throw Error(ErrorCode::ConfigError, "template", "document is not a mapping");

  LanguageTemplate t;
  t.language_id = scalar(required(doc, "language_id"), "language_id");
  if (t.language_id.empty()) throw Error(ErrorCode::MissingKey, "language_id");
  t.grammar_ref = scalar(required(doc, "grammar_ref"), "grammar_ref");
  t.file_extensions = string_list(required(doc, "file_extensions"), "file_extensions");
  if (t.file_extensions.empty()) throw Error(ErrorCode::MissingKey, "file_extensions");
  if (doc["indent_unit"]) t.indent_unit = scalar(doc["indent_unit"], "indent_unit");
  t.test_file_patterns = string_list(doc["test_file_patterns"], "test_file_patterns");
  if (doc["comment_prefix"]) t.comment_prefix = scalar(doc["comment_prefix"], "comment_prefix");
  t.entity_queries = string_map(required(doc, "entity_queries"), "entity_queries");
  if (!t.entity_queries.contains("function")) {
    throw Error(ErrorCode::MissingKey, "entity_queries.function");
  }
  for (const auto& [name, _] : t.entity_queries) {
    if (name != "function" && name != "method" && name != "class") {
      throw Error(ErrorCode::ConfigError, "entity_queries." + name, "unknown entity kind");
    }
  }
  t.complexity_queries = string_map(doc["complexity_queries"], "complexity_queries");
  if (doc["stub_body_template"]) {
    t.stub_body_template = scalar(doc["stub_body_template"], "stub_body_template");
  }

  if (YAML::Node ops = doc["operators"]) {
    if (YAML::Node groups = ops["groups"]) {
      if (!groups.IsMap()) throw Error(ErrorCode::ConfigError, "operators.groups", "expected a mapping");
      for (const auto& kv : groups) {
        t.operator_groups[kv.first.Scalar()] =
            string_list(kv.second, "operators.groups." + kv.first.Scalar());
      }
    }
    t.operator_inversions = string_map(ops["inversions"], "operators.inversions");
  }

  if (YAML::Node rules = doc["injection_rules"]) {
    if (!rules.IsMap()) throw Error(ErrorCode::ConfigError, "injection_rules", "expected a mapping");
    check_duplicate_keys(rules);
    for (const auto& kv : rules) {
      std::string key = kv.first.Scalar();
      auto id = parse_modifier(key);
      if (!id) throw Error(ErrorCode::UnknownModifier, key);
      InjectionRule rule;
      if (kv.second.IsScalar()) {
        rule.query = kv.second.Scalar();
      } else {
        rule.query = scalar(required(kv.second, "query"), "injection_rules." + key + ".query");
        rule.preconditions =
            string_list(kv.second["preconditions"], "injection_rules." + key + ".preconditions");
      }
      t.injection_rules.emplace(*id, std::move(rule));
    }
  }
  return t;
}

LanguageTemplate load_template_file(const std::filesystem::path& path) {
  return load_template(fsutil::read_file(path));
}

std::vector<std::string> known_preconditions(const LanguageTemplate& tpl) {
  std::vector<std::string> out = builtin_preconditions();
  for (const auto& [signal, _] : tpl.complexity_queries) out.push_back("has_" + signal);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ValidationIssue> validate_template(const LanguageTemplate& tpl,
                                               const syntax::GrammarRegistry& grammars) {
  const syntax::Grammar& g = grammars.require(tpl.grammar_ref);
  std::vector<ValidationIssue> issues;

  auto check = [&](const std::string& subject, const std::string& text,
                   const std::vector<std::string>& captures) {
    try {
      auto q = syntax::Query::compile(g, text);
      for (const auto& c : captures) {
        if (!q.has_capture(c)) issues.push_back({"MissingCapture", subject, "@" + c});
      }
    } catch (const Error& e) {
      issues.push_back({"MalformedQuery", subject, e.subject() + ": " + e.detail()});
    }
  };

  for (const auto& [name, text] : tpl.entity_queries) {
    check("entity_queries." + name, text, {"entity", "name", "body"});
  }
  for (const auto& [name, text] : tpl.complexity_queries) {
    check("complexity_queries." + name, text, {});
  }
  auto known = known_preconditions(tpl);
  for (const auto& [id, rule] : tpl.injection_rules) {
    std::string subject = "injection_rules." + std::string(to_string(id));
    check(subject, rule.query, required_captures(id));
    for (const auto& p : rule.preconditions) {
      if (!std::binary_search(known.begin(), known.end(), p)) {
        issues.push_back({"UnknownPrecondition", subject, p});
      }
    }
  }
  return issues;
}

std::string CompiledTemplate::render_stub(std::string_view outer) const {
  std::string inner = std::string(outer) + tpl.indent_unit;
  std::string out;
  const std::string& s = tpl.stub_body_template;
  for (std::size_t i = 0; i < s.size();) {
    if (s.compare(i, 8, "{indent}") == 0) {
      out += inner;
      i += 8;
    } else if (s.compare(i, 7, "{outer}") == 0) {
      out += outer;
      i += 7;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

void TemplateRegistry::add(LanguageTemplate tpl) {
  if (find(tpl.language_id) != nullptr) {
    throw Error(ErrorCode::ConfigError, tpl.language_id, "duplicate language_id");
  }
  auto issues = validate_template(tpl, *grammars_);
  if (!issues.empty()) {
    std::string detail;
    for (const auto& i : issues) {
      if (!detail.empty()) detail += "; ";
      detail += i.kind + " " + i.subject + " (" + i.detail + ")";
    }
    throw Error(ErrorCode::ConfigError, tpl.language_id, detail);
  }
  auto c = std::make_unique<CompiledTemplate>();
  c->grammar = &grammars_->require(tpl.grammar_ref);
  for (const auto& [k, v] : tpl.entity_queries) {
    c->entity_queries.emplace(k, syntax::Query::compile(*c->grammar, v));
  }
  for (const auto& [k, v] : tpl.complexity_queries) {
    c->complexity_queries.emplace(k, syntax::Query::compile(*c->grammar, v));
  }
  for (const auto& [k, v] : tpl.injection_rules) {
    c->injection_queries.emplace(k, syntax::Query::compile(*c->grammar, v.query));
  }
  c->tpl = std::move(tpl);
  templates_.push_back(std::move(c));
}

TemplateRegistry TemplateRegistry::load_dir(const std::filesystem::path& dir,
                                            const syntax::GrammarRegistry& grammars) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::ConfigError, dir.string(), "templates directory not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  TemplateRegistry reg(grammars);
  for (const auto& f : files) reg.add(load_template_file(f));
  return reg;
}

const CompiledTemplate* TemplateRegistry::find(std::string_view language_id) const {
  for (const auto& t : templates_) {
    if (t->tpl.language_id == language_id) return t.get();
  }
  return nullptr;
}

const CompiledTemplate& TemplateRegistry::require(std::string_view language_id) const {
  if (const auto* t = find(language_id)) return *t;
  throw Error(ErrorCode::MissingTemplate, std::string(language_id));
}

std::vector<std::string> TemplateRegistry::language_ids() const {
  std::vector<std::string> out;
  for (const auto& t : templates_) out.push_back(t->tpl.language_id);
  return out;
}

std::optional<std::string> resolve_language(std::string_view path,
                                            const TemplateRegistry& registry) {
  std::optional<std::string> found;
  for (const auto& id : registry.language_ids()) {
    const auto& tpl = registry.require(id).tpl;
    bool claims = std::any_of(tpl.file_extensions.begin(), tpl.file_extensions.end(),
                              [&](const std::string& ext) {
                                return path.size() >= ext.size() &&
                                       path.substr(path.size() - ext.size()) == ext;
                              });
    if (!claims) continue;
    if (found) throw Error(ErrorCode::AmbiguousExtension, std::string(path));
    found = id;
  }
  return found;
}

}  // namespace taskforge
