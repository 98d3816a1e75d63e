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

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taskforge/syntax/grammar.hpp"
#include "taskforge/syntax/tree.hpp"

namespace taskforge::syntax {

struct QueryMatch {
  std::size_t pattern = 0;
  std::vector<std::pair<std::string, NodeId>> captures;

  // First node bound to `name`, or kNoNode.
  NodeId capture(std::string_view name) const;
};

// Pattern queries in the S-expression dialect popularised by tree-sitter:
//
//   (binary_operator left: _ @l operator: "+" right: (identifier) @r) @expr
//   [(for_statement) (while_statement)] @loop
//   ((integer) @lit (#match? @lit "^[0-9]+$"))
//   (class_definition !superclasses)
//
// Supported: named nodes, (_) and _, "literal" tokens, field constraints,
// negated fields, alternations, captures, grouping with predicates
// (#eq? #not-eq? #match? #not-match?), and ';' line comments. Child patterns
// match an ordered subsequence of the node's children. Quantifiers and
// anchors are rejected as malformed.
class Query {
 public:
  // Throws Error{MalformedQuery} with the byte offset in subject().
  static Query compile(const Grammar& grammar, std::string_view text);

  // Matches rooted at every node of the subtree under `root`, in pre-order,
  // then by pattern index.
  std::vector<QueryMatch> matches(const SyntaxTree& tree, NodeId root) const;
  std::vector<QueryMatch> matches(const SyntaxTree& tree) const {
    return matches(tree, tree.root());
  }
  // Matches rooted exactly at `node`.
  std::vector<QueryMatch> matches_at(const SyntaxTree& tree, NodeId node) const;

  std::size_t pattern_count() const;
  bool has_capture(std::string_view name) const;
  const std::string& text() const;

  struct Impl;

 private:
  explicit Query(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace taskforge::syntax
