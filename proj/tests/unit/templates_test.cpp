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

#include <gtest/gtest.h>

#include <algorithm>

#include "taskforge/common/error.hpp"
#include "taskforge/templates/template.hpp"

using namespace taskforge;

namespace {

const char* kMinimal = R"(
language_id: toy
grammar_ref: python@1
file_extensions: [".x"]
entity_queries:
  function: "(function_definition name: (identifier) @name body: (block) @body) @entity"
)";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

bool has_issue(const std::vector<ValidationIssue>& issues, const std::string& kind) {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == kind; });
}

LanguageTemplate with_ext(std::string id, std::string ext) {
  LanguageTemplate t = load_template(kMinimal);
  t.language_id = std::move(id);
  t.file_extensions = {std::move(ext)};
  return t;
}

}  // namespace

TEST(LoadTemplate, MinimalDocGetsDefaults) {
  LanguageTemplate t = load_template(kMinimal);
  EXPECT_EQ(t.language_id, "toy");
  EXPECT_EQ(t.indent_unit, "    ");
  EXPECT_TRUE(t.test_file_patterns.empty());
  EXPECT_TRUE(t.injection_rules.empty());
  EXPECT_EQ(t.file_extensions, std::vector<std::string>{".x"});
}

TEST(LoadTemplate, InjectionRuleKeyedByModifier) {
  std::string doc = std::string(kMinimal) + R"(
injection_rules:
  op_change:
    query: "(binary_operator operator: _ @op) @target"
)";
  LanguageTemplate t = load_template(doc);
  ASSERT_TRUE(t.injection_rules.contains(ModifierId::op_change));
  EXPECT_TRUE(validate_template(t).empty());
}

TEST(LoadTemplate, MissingLanguageId) {
  try {
    load_template("grammar_ref: python@1\nfile_extensions: ['.x']\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingKey);
    EXPECT_EQ(e.subject(), "language_id");
  }
}

TEST(LoadTemplate, UnknownModifierKey) {
  std::string doc = std::string(kMinimal) + "injection_rules:\n  goto_insert:\n    query: \"(block) @target\"\n";
  EXPECT_EQ(code_of([&] { load_template(doc); }), ErrorCode::UnknownModifier);
}

TEST(ValidateTemplate, BundledTemplatesAreClean) {
  for (const char* name : {"python.yaml", "javascript.yaml"}) {
    auto t = load_template_file(std::filesystem::path(TASKFORGE_SOURCE_DIR) / "templates" / name);
    auto issues = validate_template(t);
    EXPECT_TRUE(issues.empty()) << name << ": " << issues.front().kind << " " << issues.front().subject;
  }
}

TEST(ValidateTemplate, MalformedQueryReported) {
  LanguageTemplate t = load_template(kMinimal);
  t.injection_rules[ModifierId::op_change] = {"(binary_operator @target", {}};
  EXPECT_TRUE(has_issue(validate_template(t), "MalformedQuery"));
}

TEST(ValidateTemplate, UnknownPreconditionReported) {
  LanguageTemplate t = load_template(kMinimal);
  t.injection_rules[ModifierId::block_drop] = {"(block (for_statement) @target)", {"has_goto"}};
  EXPECT_TRUE(has_issue(validate_template(t), "UnknownPrecondition"));
}

TEST(ValidateTemplate, UnknownGrammar) {
  LanguageTemplate t = load_template(kMinimal);
  t.grammar_ref = "cobol@9";
  EXPECT_EQ(code_of([&] { validate_template(t); }), ErrorCode::GrammarUnavailable);
}

TEST(ResolveLanguage, ByExtension) {
  TemplateRegistry reg;
  reg.add(with_ext("toy", ".x"));
  EXPECT_EQ(resolve_language("src/lib.x", reg), "toy");
  EXPECT_EQ(resolve_language("README.md", reg), std::nullopt);
}

TEST(ResolveLanguage, AmbiguousExtension) {
  TemplateRegistry reg;
  reg.add(with_ext("toy", ".x"));
  reg.add(with_ext("toy2", ".x"));
  EXPECT_EQ(code_of([&] { resolve_language("a.x", reg); }), ErrorCode::AmbiguousExtension);
}

TEST(Registry, LoadsBundledDirectory) {
  auto reg = TemplateRegistry::load_dir(std::filesystem::path(TASKFORGE_SOURCE_DIR) / "templates");
  EXPECT_EQ(reg.language_ids(), (std::vector<std::string>{"javascript", "python"}));
  EXPECT_EQ(resolve_language("js/geom.js", reg), "javascript");
}
