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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskforge/mutation/modifier.hpp"
#include "taskforge/syntax/grammar.hpp"
#include "taskforge/syntax/query.hpp"

namespace taskforge {

struct InjectionRule {
  std::string query;
  std::vector<std::string> preconditions;

  friend bool operator==(const InjectionRule&, const InjectionRule&) = default;
};

// Everything language-specific the engine knows, loaded from one YAML file.
struct LanguageTemplate {
  std::string language_id;
  std::string grammar_ref;
  std::vector<std::string> file_extensions;
  std::string indent_unit = "    ";
  std::vector<std::string> test_file_patterns;
  std::string comment_prefix;
  // "function", "method", "class" -> query with @entity, @name, @body.
  std::map<std::string, std::string> entity_queries;
  // signal -> query; a match sets flag "has_<signal>" on the entity.
  std::map<std::string, std::string> complexity_queries;
  std::map<ModifierId, InjectionRule> injection_rules;
  // Replacement for a hollowed body. "{indent}" expands to the body's
  // indentation plus one indent_unit, "{outer}" to the body's indentation.
  std::string stub_body_template;
  // op_change siblings, keyed by group name.
  std::map<std::string, std::vector<std::string>> operator_groups;
  // op_flip: operator -> its logical inverse.
  std::map<std::string, std::string> operator_inversions;

  friend bool operator==(const LanguageTemplate&, const LanguageTemplate&) = default;
};

// Parses a YAML document. Throws MissingKey, DuplicateModifierRule,
// UnknownModifier, or ConfigError for unreadable YAML. Queries are not
// compiled here.
LanguageTemplate load_template(std::string_view yaml_text);
LanguageTemplate load_template_file(const std::filesystem::path& path);

struct ValidationIssue {
  std::string kind;  // MalformedQuery | UnknownPrecondition | MissingCapture
  std::string subject;
  std::string detail;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

// Empty result means usable. Throws GrammarUnavailable.
std::vector<ValidationIssue> validate_template(
    const LanguageTemplate& tpl,
    const syntax::GrammarRegistry& grammars = syntax::GrammarRegistry::builtin());

// Precondition names a rule may reference: "has_<signal>" for each
// complexity query plus the built-in structural checks.
std::vector<std::string> known_preconditions(const LanguageTemplate& tpl);

// A validated template with its queries compiled once.
struct CompiledTemplate {
  LanguageTemplate tpl;
  const syntax::Grammar* grammar = nullptr;
  std::map<std::string, syntax::Query> entity_queries;
  std::map<std::string, syntax::Query> complexity_queries;
  std::map<ModifierId, syntax::Query> injection_queries;

  // Renders stub_body_template for a body whose first line sits at `outer`.
  std::string render_stub(std::string_view outer) const;
};

class TemplateRegistry {
 public:
  explicit TemplateRegistry(
      const syntax::GrammarRegistry& grammars = syntax::GrammarRegistry::builtin())
      : grammars_(&grammars) {}

  // Validates and compiles. Throws ConfigError (duplicate language_id, or
  // a non-empty validation report) and GrammarUnavailable.
  void add(LanguageTemplate tpl);
  // Loads every *.yaml / *.yml file in `dir`, in name order.
  static TemplateRegistry load_dir(
      const std::filesystem::path& dir,
      const syntax::GrammarRegistry& grammars = syntax::GrammarRegistry::builtin());

  const CompiledTemplate* find(std::string_view language_id) const;
  // Throws MissingTemplate.
  const CompiledTemplate& require(std::string_view language_id) const;
  std::vector<std::string> language_ids() const;
  bool empty() const { return templates_.empty(); }

 private:
  const syntax::GrammarRegistry* grammars_;
  std::vector<std::unique_ptr<CompiledTemplate>> templates_;
};

// language_id of the single template claiming the path's extension, or
// nullopt. Throws AmbiguousExtension when more than one claims it.
std::optional<std::string> resolve_language(std::string_view path,
                                            const TemplateRegistry& registry);

}  // namespace taskforge
