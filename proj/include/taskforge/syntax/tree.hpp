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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace taskforge::syntax {

class Grammar;

// Half-open byte range [start, end).
struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(const ByteSpan& o) const { return start <= o.start && o.end <= end; }
  bool overlaps(const ByteSpan& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
  friend auto operator<=>(const ByteSpan&, const ByteSpan&) = default;
};

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

// Node type and field strings point into the owning grammar's vocabulary,
// so they stay valid as long as the grammar does (grammars are static).
struct Node {
  std::string_view type;
  std::string_view field;  // field name under the parent, empty if none
  ByteSpan span;
  bool named = true;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
};

struct SyntaxError {
  std::size_t offset = 0;
  std::string message;
};

// Concrete syntax tree over an owned copy of the source. Nodes live in an
// arena and are addressed by NodeId; node 0 .. size()-1, root() last built.
class SyntaxTree {
 public:
  SyntaxTree(const Grammar* grammar, std::string source);

  const Grammar& grammar() const { return *grammar_; }
  const std::string& source() const { return source_; }

  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

  std::string_view text(NodeId id) const;
  std::string_view text(ByteSpan span) const;

  // A parse with errors still yields a root; the file is then unusable for
  // mutation and gets reported as parse_error.
  bool has_error() const { return !errors_.empty(); }
  const std::vector<SyntaxError>& errors() const { return errors_; }

  std::vector<NodeId> named_children(NodeId id) const;
  NodeId child_by_field(NodeId id, std::string_view field) const;
  // Every node in the subtree rooted at `id`, pre-order, `id` included.
  std::vector<NodeId> preorder(NodeId id) const;
  // Smallest node whose span equals `span`, or kNoNode.
  NodeId find_exact(ByteSpan span, std::string_view type = {}) const;

  std::string to_sexp(NodeId id) const;
  std::string to_sexp() const { return to_sexp(root_); }

  // Builder interface used by grammar implementations.
  NodeId add_leaf(std::string_view type, ByteSpan span, bool named);
  struct Child {
    NodeId id;
    std::string_view field;
  };
  NodeId add_node(std::string_view type, const std::vector<Child>& children,
                  ByteSpan span_hint = {});
  void set_root(NodeId id) { root_ = id; }
  void add_error(std::size_t offset, std::string message);

 private:
  const Grammar* grammar_;
  std::string source_;
  std::vector<Node> nodes_;
  NodeId root_ = kNoNode;
  std::vector<SyntaxError> errors_;
};

}  // namespace taskforge::syntax
