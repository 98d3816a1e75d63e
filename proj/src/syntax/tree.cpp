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

#include "taskforge/syntax/tree.hpp"

#include <algorithm>
#include <stdexcept>

#include "taskforge/syntax/grammar.hpp"

namespace taskforge::syntax {

SyntaxTree::SyntaxTree(const Grammar* grammar, std::string source)
    : grammar_(grammar), source_(std::move(source)) {}

std::string_view SyntaxTree::text(NodeId id) const { return text(node(id).span); }

std::string_view SyntaxTree::text(ByteSpan span) const {
  if (span.end > source_.size() || span.start > span.end) {
    throw std::out_of_range("span outside source");
  }
  return std::string_view(source_).substr(span.start, span.size());
}

std::vector<NodeId> SyntaxTree::named_children(NodeId id) const {
  std::vector<NodeId> out;
  for (NodeId c : node(id).children) {
    if (nodes_[c].named) out.push_back(c);
  }
  return out;
}

NodeId SyntaxTree::child_by_field(NodeId id, std::string_view field) const {
  for (NodeId c : node(id).children) {
    if (nodes_[c].field == field) return c;
  }
  return kNoNode;
}

std::vector<NodeId> SyntaxTree::preorder(NodeId id) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = nodes_[n].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

NodeId SyntaxTree::find_exact(ByteSpan span, std::string_view type) const {
  if (root_ == kNoNode) return kNoNode;
  NodeId best = kNoNode;
  for (NodeId n : preorder(root_)) {
    const Node& nd = nodes_[n];
    if (nd.span == span && (type.empty() || nd.type == type)) best = n;
  }
  return best;
}

std::string SyntaxTree::to_sexp(NodeId id) const {
  const Node& nd = node(id);
  if (!nd.named) return "\"" + std::string(nd.type) + "\"";
  std::string out = "(" + std::string(nd.type);
  for (NodeId c : nd.children) {
    if (!nodes_[c].named) continue;
    out += " ";
    if (!nodes_[c].field.empty()) out += std::string(nodes_[c].field) + ": ";
    out += to_sexp(c);
  }
  return out + ")";
}

NodeId SyntaxTree::add_leaf(std::string_view type, ByteSpan span, bool named) {
  Node n;
  n.type = named ? grammar_->named_type(type) : grammar_->anonymous_type(type);
  n.span = span;
  n.named = named;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId SyntaxTree::add_node(std::string_view type, const std::vector<Child>& children,
                            ByteSpan span_hint) {
  Node n;
  n.type = grammar_->named_type(type);
  n.named = true;
  if (children.empty()) {
    n.span = span_hint;
  } else {
    n.span.start = nodes_.at(children.front().id).span.start;
    n.span.end = nodes_.at(children.back().id).span.end;
    for (const auto& c : children) {
      n.span.start = std::min(n.span.start, nodes_[c.id].span.start);
      n.span.end = std::max(n.span.end, nodes_[c.id].span.end);
    }
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  for (const auto& c : children) {
    n.children.push_back(c.id);
    nodes_[c.id].parent = id;
    nodes_[c.id].field = c.field.empty() ? std::string_view{} : grammar_->field(c.field);
  }
  nodes_.push_back(std::move(n));
  return id;
}

void SyntaxTree::add_error(std::size_t offset, std::string message) {
  errors_.push_back({offset, std::move(message)});
}

}  // namespace taskforge::syntax
