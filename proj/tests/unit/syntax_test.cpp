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

#include "taskforge/common/error.hpp"
#include "taskforge/syntax/grammar.hpp"
#include "taskforge/syntax/query.hpp"

using namespace taskforge;
using namespace taskforge::syntax;

namespace {

const Grammar& py() { return GrammarRegistry::builtin().require("python@1"); }
const Grammar& js() { return GrammarRegistry::builtin().require("javascript@1"); }

}  // namespace

TEST(PythonGrammar, ParsesFunctionWithBody) {
  auto tree = py().parse("def add(a, b):\n    return a + b\n");
  ASSERT_FALSE(tree.has_error());
  EXPECT_EQ(tree.to_sexp(),
            "(module (function_definition name: (identifier) parameters: (parameters "
            "(identifier) (identifier)) body: (block (return_statement (binary_operator "
            "left: (identifier) right: (identifier))))))");
}

TEST(PythonGrammar, RejectsBadIndentation) {
  auto tree = py().parse("def f():\n    x = 1\n  y = 2\n");
  EXPECT_TRUE(tree.has_error());
}

TEST(JavascriptGrammar, RejectsUnbalancedBraces) {
  auto tree = js().parse("function f() {\n  if (x) {\n    return 1;\n}\n");
  EXPECT_TRUE(tree.has_error());
}

TEST(JavascriptGrammar, ParsesClassWithHeritage) {
  auto tree = js().parse("class A extends B {\n  m(x) { return x * 2; }\n  y = 3;\n}\n");
  ASSERT_FALSE(tree.has_error()) << tree.errors().front().message;
  EXPECT_EQ(tree.to_sexp(),
            "(program (class_declaration name: (identifier) (class_heritage (identifier)) "
            "body: (class_body (method_definition name: (property_identifier) parameters: "
            "(formal_parameters (identifier)) body: (statement_block (return_statement "
            "(binary_expression left: (identifier) right: (number))))) (field_definition "
            "property: (property_identifier) value: (number)))))");
}

TEST(Query, MatchesWithFieldsAndPredicates) {
  auto tree = py().parse("x = a + b\ny = c - 1\n");
  auto q = Query::compile(py(), R"(((binary_operator left: (identifier) @l operator: "+" @op) @e
                                      (#eq? @l "a")))");
  auto m = q.matches(tree);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(tree.text(m[0].capture("op")), "+");
  EXPECT_EQ(tree.text(m[0].capture("e")), "a + b");
}

TEST(Query, AlternationAndNegatedField) {
  auto tree = py().parse("class A:\n    pass\nclass B(A):\n    pass\n");
  auto q = Query::compile(py(), "(class_definition !superclasses name: (identifier) @n)");
  auto m = q.matches(tree);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(tree.text(m[0].capture("n")), "A");
  auto alt = Query::compile(py(), "[(class_definition) (pass_statement)] @x");
  EXPECT_EQ(alt.matches(tree).size(), 4u);
}

TEST(Query, MalformedQueriesThrow) {
  for (const char* bad : {"(nonexistent_node)", "(identifier", "(identifier)*",
                          "(binary_operator bogus: (identifier))", "((identifier) @a (#eq? @b \"x\"))",
                          "\"notatoken\""}) {
    EXPECT_THROW(Query::compile(py(), bad), Error) << bad;
  }
}
