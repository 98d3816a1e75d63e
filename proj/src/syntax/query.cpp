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

#include "taskforge/syntax/query.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>
#include <set>

#include "taskforge/common/error.hpp"

namespace taskforge::syntax {

NodeId QueryMatch::capture(std::string_view name) const {
  for (const auto& [n, id] : captures) {
    if (n == name) return id;
  }
  return kNoNode;
}

namespace {

struct PatternNode;

struct ChildPattern {
  std::string field;
  std::unique_ptr<PatternNode> pattern;
};

struct PatternNode {
  enum class Kind { Named, AnyNamed, Wildcard, Anonymous, Alternation };
  Kind kind = Kind::Wildcard;
  std::string type;
  std::vector<ChildPattern> children;
  std::vector<std::string> negated_fields;
  std::vector<std::unique_ptr<PatternNode>> alternatives;
  std::vector<std::string> captures;
};

struct PredicateArg {
  bool is_capture = false;
  std::string value;
};

struct Predicate {
  std::string op;
  std::vector<PredicateArg> args;
  std::shared_ptr<std::regex> regex;
};

struct TopPattern {
  std::unique_ptr<PatternNode> root;
  std::vector<Predicate> predicates;
  std::set<std::string> capture_names;
};

using Bindings = std::vector<std::pair<std::string, NodeId>>;

}  // namespace

struct Query::Impl {
  std::string text;
  std::vector<TopPattern> patterns;
  std::set<std::string> capture_names;
};

namespace {

class QueryParser {
 public:
  QueryParser(const Grammar& g, std::string_view text) : g_(g), s_(text) {}

  std::vector<TopPattern> parse_all() {
    std::vector<TopPattern> out;
    skip_ws();
    while (pos_ < s_.size()) {
      TopPattern tp;
      current_ = &tp;
      tp.root = parse_pattern(/*top=*/true);
      current_ = nullptr;
      for (const auto& pred : tp.predicates) {
        for (const auto& a : pred.args) {
          if (a.is_capture && !tp.capture_names.contains(a.value)) {
            fail("predicate references undefined capture @" + a.value);
          }
        }
      }
      out.push_back(std::move(tp));
      skip_ws();
    }
    if (out.empty()) fail("empty query");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::MalformedQuery, "offset " + std::to_string(pos_), msg);
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == '?' || c == '!';
  }

  std::string parse_ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string parse_string() {
    if (peek() != '"') fail("expected string literal");
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        char e = s_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: out.push_back(e); break;
        }
      } else {
        out.push_back(c);
      }
    }
    if (pos_ >= s_.size()) fail("unterminated string literal");
    ++pos_;
    return out;
  }

  void parse_captures(PatternNode& node) {
    for (;;) {
      skip_ws();
      char c = peek();
      if (c == '@') {
        ++pos_;
        std::size_t start = pos_;
        while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
        if (start == pos_) fail("empty capture name");
        std::string name(s_.substr(start, pos_ - start));
        node.captures.push_back(name);
        current_->capture_names.insert(name);
      } else if (c == '?' || c == '*' || c == '+') {
        fail("quantifiers are not supported");
      } else {
        return;
      }
    }
  }

  void parse_predicate() {
    // positioned after "(#"
    std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    Predicate p;
    p.op = std::string(s_.substr(start, pos_ - start));
    if (p.op != "eq?" && p.op != "not-eq?" && p.op != "match?" && p.op != "not-match?") {
      fail("unknown predicate #" + p.op);
    }
    for (;;) {
      skip_ws();
      char c = peek();
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '@') {
        ++pos_;
        std::size_t st = pos_;
        while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
        p.args.push_back({true, std::string(s_.substr(st, pos_ - st))});
      } else if (c == '"') {
        p.args.push_back({false, parse_string()});
      } else {
        fail("bad predicate argument");
      }
    }
    if (p.args.size() != 2 || !p.args[0].is_capture) {
      fail("predicate #" + p.op + " takes a capture and one argument");
    }
    if (p.op == "match?" || p.op == "not-match?") {
      if (p.args[1].is_capture) fail("#" + p.op + " needs a regex string");
      try {
        p.regex = std::make_shared<std::regex>(p.args[1].value, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        fail(std::string("invalid regex: ") + e.what());
      }
    }
    current_->predicates.push_back(std::move(p));
  }

  std::unique_ptr<PatternNode> parse_pattern(bool top) {
    skip_ws();
    auto node = std::make_unique<PatternNode>();
    char c = peek();
    if (c == '(') {
      ++pos_;
      skip_ws();
      char d = peek();
      if (d == '(' || d == '[' || d == '"') {
        // Grouping: one pattern followed by predicates.
        node = parse_pattern(false);
        for (;;) {
          skip_ws();
          if (peek() == ')') {
            ++pos_;
            break;
          }
          if (peek() == '(' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '#') {
            pos_ += 2;
            parse_predicate();
            continue;
          }
          fail("only predicates may follow a grouped pattern");
        }
      } else if (d == '#') {
        fail("predicate outside of a pattern");
      } else {
        std::string type;
        if (d == '_') {
          ++pos_;
          node->kind = PatternNode::Kind::AnyNamed;
        } else {
          type = parse_ident();
          if (!g_.has_named_type(type)) fail("unknown node type '" + type + "'");
          node->kind = PatternNode::Kind::Named;
          node->type = type;
        }
        for (;;) {
          skip_ws();
          char e = peek();
          if (e == ')') {
            ++pos_;
            break;
          }
          if (e == '\0') fail("unterminated pattern");
          if (e == '!') {
            ++pos_;
            std::string f = parse_ident();
            if (!g_.has_field(f)) fail("unknown field '" + f + "'");
            node->negated_fields.push_back(f);
            continue;
          }
          if (e == '(' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '#') {
            pos_ += 2;
            parse_predicate();
            continue;
          }
          if (e == '.') fail("anchors are not supported");
          ChildPattern child;
          if (std::isalpha(static_cast<unsigned char>(e)) ||
              (e == '_' && pos_ + 1 < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '_'))) {
            std::size_t save = pos_;
            std::string f = parse_ident();
            skip_ws();
            if (peek() != ':') {
              pos_ = save;
              fail("bare identifier in pattern (missing parentheses?)");
            }
            ++pos_;
            if (!g_.has_field(f)) fail("unknown field '" + f + "'");
            child.field = f;
          }
          child.pattern = parse_pattern(false);
          node->children.push_back(std::move(child));
        }
      }
    } else if (c == '[') {
      ++pos_;
      node->kind = PatternNode::Kind::Alternation;
      for (;;) {
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        if (peek() == '\0') fail("unterminated alternation");
        node->alternatives.push_back(parse_pattern(false));
      }
      if (node->alternatives.empty()) fail("empty alternation");
    } else if (c == '"') {
      node->kind = PatternNode::Kind::Anonymous;
      node->type = parse_string();
      if (!g_.has_anonymous_type(node->type)) fail("unknown token \"" + node->type + "\"");
    } else if (c == '_') {
      ++pos_;
      node->kind = PatternNode::Kind::Wildcard;
    } else {
      fail(top ? "expected a pattern" : "unexpected character in pattern");
    }
    parse_captures(*node);
    return node;
  }

  const Grammar& g_;
  std::string_view s_;
  std::size_t pos_ = 0;
  TopPattern* current_ = nullptr;
};

// Enumerates every way a pattern can bind at a node. Each complete binding
// is handed to the continuation; callers undo their captures afterwards.
class Matcher {
 public:
  using Cont = std::function<void(Bindings&)>;

  explicit Matcher(const SyntaxTree& t) : t_(t) {}

  void match(const PatternNode& p, NodeId n, Bindings& b, const Cont& k) const {
    const Node& nd = t_.node(n);
    auto with_captures = [&](Bindings& bb) {
      std::size_t mark = bb.size();
      for (const auto& c : p.captures) bb.emplace_back(c, n);
      k(bb);
      bb.resize(mark);
    };
    switch (p.kind) {
      case PatternNode::Kind::Alternation:
        for (const auto& alt : p.alternatives) match(*alt, n, b, with_captures);
        return;
      case PatternNode::Kind::Wildcard:
        break;
      case PatternNode::Kind::AnyNamed:
        if (!nd.named) return;
        break;
      case PatternNode::Kind::Named:
        if (!nd.named || nd.type != p.type) return;
        break;
      case PatternNode::Kind::Anonymous:
        if (nd.named || nd.type != p.type) return;
        break;
    }
    for (const auto& f : p.negated_fields) {
      if (t_.child_by_field(n, f) != kNoNode) return;
    }
    match_children(p.children, 0, nd.children, 0, b, with_captures);
  }

 private:
  void match_children(const std::vector<ChildPattern>& pats, std::size_t i,
                      const std::vector<NodeId>& kids, std::size_t j, Bindings& b,
                      const Cont& k) const {
    if (i == pats.size()) {
      k(b);
      return;
    }
    const auto& cp = pats[i];
    for (std::size_t c = j; c < kids.size(); ++c) {
      if (!cp.field.empty() && t_.node(kids[c]).field != cp.field) continue;
      match(*cp.pattern, kids[c], b, [&](Bindings& bb) {
        match_children(pats, i + 1, kids, c + 1, bb, k);
      });
    }
  }

  const SyntaxTree& t_;
};

bool check_predicates(const TopPattern& tp, const SyntaxTree& t, const Bindings& b) {
  auto lookup = [&](const std::string& name) -> NodeId {
    for (const auto& [n, id] : b) {
      if (n == name) return id;
    }
    return kNoNode;
  };
  for (const auto& p : tp.predicates) {
    NodeId a = lookup(p.args[0].value);
    if (a == kNoNode) return false;
    std::string lhs(t.text(a));
    if (p.op == "eq?" || p.op == "not-eq?") {
      std::string rhs;
      if (p.args[1].is_capture) {
        NodeId bnode = lookup(p.args[1].value);
        if (bnode == kNoNode) return false;
        rhs = std::string(t.text(bnode));
      } else {
        rhs = p.args[1].value;
      }
      bool eq = lhs == rhs;
      if ((p.op == "eq?") != eq) return false;
    } else {
      bool m = std::regex_search(lhs, *p.regex);
      if ((p.op == "match?") != m) return false;
    }
  }
  return true;
}

}  // namespace

Query Query::compile(const Grammar& grammar, std::string_view text) {
  auto impl = std::make_shared<Impl>();
  impl->text = std::string(text);
  QueryParser parser(grammar, impl->text);
  impl->patterns = parser.parse_all();
  for (const auto& p : impl->patterns) {
    impl->capture_names.insert(p.capture_names.begin(), p.capture_names.end());
  }
  return Query(std::move(impl));
}

std::vector<QueryMatch> Query::matches_at(const SyntaxTree& tree, NodeId node) const {
  std::vector<QueryMatch> out;
  Matcher m(tree);
  for (std::size_t i = 0; i < impl_->patterns.size(); ++i) {
    const auto& tp = impl_->patterns[i];
    std::set<Bindings> seen;
    Bindings b;
    m.match(*tp.root, node, b, [&](Bindings& found) {
      if (!check_predicates(tp, tree, found)) return;
      Bindings key = found;
      std::sort(key.begin(), key.end());
      if (seen.insert(std::move(key)).second) out.push_back({i, found});
    });
  }
  return out;
}

std::vector<QueryMatch> Query::matches(const SyntaxTree& tree, NodeId root) const {
  std::vector<QueryMatch> out;
  if (root == kNoNode) return out;
  for (NodeId n : tree.preorder(root)) {
    auto here = matches_at(tree, n);
    std::move(here.begin(), here.end(), std::back_inserter(out));
  }
  return out;
}

std::size_t Query::pattern_count() const { return impl_->patterns.size(); }

bool Query::has_capture(std::string_view name) const {
  return impl_->capture_names.contains(std::string(name));
}

const std::string& Query::text() const { return impl_->text; }

}  // namespace taskforge::syntax
