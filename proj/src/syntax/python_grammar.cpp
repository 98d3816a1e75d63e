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

#include <array>
#include <cctype>
#include <cstring>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taskforge/syntax/grammar.hpp"

namespace taskforge::syntax {
namespace {

using Kids = std::vector<SyntaxTree::Child>;

struct ParseFail {
  std::size_t offset;
  std::string message;
};

enum class T { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Tok {
  T kind;
  ByteSpan span;
  std::string_view text;
  bool is_float = false;
};

constexpr std::array<std::string_view, 40> kOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==",
    "!=",  "+=",  "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",
    "%",   "@",   "&",   "|",   "^",   "~",  "<",  ">",  ".",  ",",  ":",  ";"};

bool is_name_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || u >= 0x80;
}
bool is_name_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  std::vector<Tok> run() {
    indents_ = {0};
    bool line_start = true;
    while (true) {
      if (line_start && brackets_.empty()) {
        std::size_t col = 0;
        std::size_t p = pos_;
        while (p < s_.size() && (s_[p] == ' ' || s_[p] == '\t' || s_[p] == '\f')) {
          if (s_[p] == '\t') {
            col = (col / 8 + 1) * 8;
          } else if (s_[p] == ' ') {
            ++col;
          } else {
            col = 0;
          }
          ++p;
        }
        if (p >= s_.size()) {
          pos_ = p;
          break;
        }
        if (s_[p] == '\n' || s_[p] == '\r' || s_[p] == '#') {
          while (p < s_.size() && s_[p] != '\n') ++p;
          pos_ = p < s_.size() ? p + 1 : p;
          continue;
        }
        pos_ = p;
        if (col > indents_.back()) {
          indents_.push_back(col);
          emit(T::Indent, pos_, pos_);
        } else {
          while (col < indents_.back()) {
            indents_.pop_back();
            emit(T::Dedent, pos_, pos_);
          }
          if (col != indents_.back()) fail(pos_, "unindent does not match any outer level");
        }
        line_start = false;
      }
      if (pos_ >= s_.size()) break;
      char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '\\') {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && s_[p] == '\r') ++p;
        if (p >= s_.size() || s_[p] != '\n') fail(pos_, "unexpected character after line continuation");
        pos_ = p + 1;
      } else if (c == '\n' || c == '\r') {
        std::size_t start = pos_;
        pos_ += (c == '\r' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '\n') ? 2 : 1;
        if (brackets_.empty()) {
          emit(T::Newline, start, pos_);
          line_start = true;
        }
      } else if (string_start(pos_)) {
        lex_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < s_.size() &&
                  std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        lex_number();
      } else if (is_name_start(c)) {
        std::size_t start = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
        emit(T::Name, start, pos_);
      } else {
        lex_op();
      }
    }
    if (!brackets_.empty()) fail(s_.size(), "unclosed bracket");
    if (!toks_.empty() && toks_.back().kind != T::Newline && toks_.back().kind != T::Dedent) {
      emit(T::Newline, s_.size(), s_.size());
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(T::Dedent, s_.size(), s_.size());
    }
    emit(T::End, s_.size(), s_.size());
    return std::move(toks_);
  }

 private:
  [[noreturn]] static void fail(std::size_t at, std::string msg) {
    throw ParseFail{at, std::move(msg)};
  }

  void emit(T kind, std::size_t a, std::size_t b, bool is_float = false) {
    toks_.push_back({kind, {a, b}, s_.substr(a, b - a), is_float});
  }

  bool string_start(std::size_t p) const {
    std::size_t k = 0;
    while (k < 2 && p + k < s_.size() && s_[p + k] != '\0' &&
           std::strchr("rRbBuUfF", s_[p + k]) != nullptr) {
      ++k;
    }
    return p + k < s_.size() && (s_[p + k] == '"' || s_[p + k] == '\'');
  }

  void lex_string() {
    std::size_t start = pos_;
    while (s_[pos_] != '"' && s_[pos_] != '\'') ++pos_;
    char q = s_[pos_];
    bool triple = s_.substr(pos_, 3) == std::string(3, q);
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= s_.size()) fail(start, "unterminated string literal");
      char c = s_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (!triple && (c == '\n' || c == '\r')) fail(start, "unterminated string literal");
      if (triple ? s_.substr(pos_, 3) == std::string(3, q) : c == q) {
        pos_ += triple ? 3 : 1;
        break;
      }
      ++pos_;
    }
    emit(T::String, start, std::min(pos_, s_.size()));
  }

  void lex_number() {
    std::size_t start = pos_;
    bool is_float = false;
    auto digits = [&] {
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
    };
    if (s_[pos_] == '0' && pos_ + 1 < s_.size() && std::strchr("xXoObB", s_[pos_ + 1]) &&
        s_[pos_ + 1] != '\0') {
      pos_ += 2;
      while (pos_ < s_.size() &&
             (std::isxdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
    } else {
      digits();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        is_float = true;
        ++pos_;
        digits();
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
        if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
          is_float = true;
          pos_ = p;
          digits();
        }
      }
      if (pos_ < s_.size() && (s_[pos_] == 'j' || s_[pos_] == 'J')) {
        is_float = true;
        ++pos_;
      }
    }
    if (pos_ < s_.size() && is_name_char(s_[pos_])) fail(start, "invalid number literal");
    emit(T::Number, start, pos_, is_float);
  }

  void lex_op() {
    char c = s_[pos_];
    if (c == '(' || c == '[' || c == '{') {
      brackets_.push_back(c);
      emit(T::Op, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (brackets_.empty() || brackets_.back() != open) fail(pos_, "unmatched bracket");
      brackets_.pop_back();
      emit(T::Op, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    if (c == '=' && !(pos_ + 1 < s_.size() && s_[pos_ + 1] == '=')) {
      emit(T::Op, pos_, pos_ + 1);
      ++pos_;
      return;
    }
    for (std::string_view op : kOps) {
      if (s_.substr(pos_, op.size()) == op) {
        emit(T::Op, pos_, pos_ + op.size());
        pos_ += op.size();
        return;
      }
    }
    fail(pos_, std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> indents_;
  std::vector<char> brackets_;
  std::vector<Tok> toks_;
};

const std::set<std::string_view>& keywords() {
  static const std::set<std::string_view> k = {
      "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
      "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
      "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
      "while", "with",   "yield"};
  return k;
}

constexpr std::array<std::string_view, 13> kAugOps = {
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", "<<=", ">>=", "&=", "|=", "^=", "@="};

class Parser {
 public:
  Parser(SyntaxTree& t, std::vector<Tok> toks) : t_(t), toks_(std::move(toks)) {}

  NodeId parse_module() {
    Kids kids;
    while (cur().kind != T::End) {
      if (cur().kind == T::Newline) {
        ++i_;
        continue;
      }
      if (cur().kind == T::Indent) fail("unexpected indent");
      parse_statement(kids);
    }
    return t_.add_node("module", kids, {0, 0});
  }

 private:
  // ---- token helpers ----
  const Tok& cur() const { return toks_[i_]; }
  const Tok& peek(std::size_t k = 1) const {
    return toks_[std::min(i_ + k, toks_.size() - 1)];
  }
  bool is_op(std::string_view o) const { return cur().kind == T::Op && cur().text == o; }
  bool is_kw(std::string_view k) const { return cur().kind == T::Name && cur().text == k; }
  static bool tok_op(const Tok& t, std::string_view o) { return t.kind == T::Op && t.text == o; }
  // Index of the bracket closing the one at `open` (the lexer guarantees
  // brackets balance).
  std::size_t matching_close(std::size_t open) const {
    int depth = 0;
    for (std::size_t j = open; j < toks_.size(); ++j) {
      if (toks_[j].kind != T::Op) continue;
      std::string_view o = toks_[j].text;
      if (o == "(" || o == "[" || o == "{") ++depth;
      if ((o == ")" || o == "]" || o == "}") && --depth == 0) return j;
    }
    return toks_.size() - 2;
  }
  static bool tok_is_kw(const Tok& t, std::string_view k) {
    return t.kind == T::Name && t.text == k;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseFail{cur().span.start, msg};
  }

  NodeId anon() {
    NodeId id = t_.add_leaf(cur().text, cur().span, false);
    ++i_;
    return id;
  }
  NodeId expect_op(std::string_view o) {
    if (!is_op(o)) fail("expected '" + std::string(o) + "'");
    return anon();
  }
  NodeId expect_kw(std::string_view k) {
    if (!is_kw(k)) fail("expected '" + std::string(k) + "'");
    return anon();
  }
  void expect_newline() {
    if (cur().kind != T::Newline) fail("expected end of statement");
    ++i_;
  }
  NodeId identifier() {
    if (cur().kind != T::Name || keywords().contains(cur().text)) fail("expected identifier");
    NodeId id = t_.add_leaf("identifier", cur().span, true);
    ++i_;
    return id;
  }
  NodeId node(std::string_view type, const Kids& kids) { return t_.add_node(type, kids); }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > 400) p_.fail("nesting too deep");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  bool starts_expression() const {
    const Tok& t = cur();
    switch (t.kind) {
      case T::Number:
      case T::String:
        return true;
      case T::Name:
        return !keywords().contains(t.text) || t.text == "True" || t.text == "False" ||
               t.text == "None" || t.text == "not" || t.text == "lambda" || t.text == "await" ||
               t.text == "yield";
      case T::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" ||
               t.text == "+" || t.text == "~" || t.text == "*" || t.text == "..." ||
               t.text == "**";
      default:
        return false;
    }
  }

  // ---- statements ----
  void parse_statement(Kids& out) {
    DepthGuard g(*this);
    if (is_op("@")) {
      out.push_back({parse_decorated(), {}});
    } else if (is_kw("def") || (is_kw("async") && tok_is_kw(peek(), "def"))) {
      out.push_back({parse_function(), {}});
    } else if (is_kw("class")) {
      out.push_back({parse_class(), {}});
    } else if (is_kw("if")) {
      out.push_back({parse_if(), {}});
    } else if (is_kw("for") || (is_kw("async") && tok_is_kw(peek(), "for"))) {
      out.push_back({parse_for(), {}});
    } else if (is_kw("while")) {
      out.push_back({parse_while(), {}});
    } else if (is_kw("try")) {
      out.push_back({parse_try(), {}});
    } else if (is_kw("with") || (is_kw("async") && tok_is_kw(peek(), "with"))) {
      out.push_back({parse_with(), {}});
    } else {
      parse_simple_statements(out);
    }
  }

  void parse_simple_statements(Kids& out) {
    out.push_back({parse_simple(), {}});
    while (is_op(";")) {
      out.push_back({anon(), {}});
      if (cur().kind == T::Newline) break;
      out.push_back({parse_simple(), {}});
    }
    expect_newline();
  }

  NodeId parse_block() {
    Kids kids;
    if (cur().kind == T::Newline) {
      ++i_;
      if (cur().kind != T::Indent) fail("expected an indented block");
      ++i_;
      while (cur().kind != T::Dedent && cur().kind != T::End) parse_statement(kids);
      if (cur().kind != T::Dedent) fail("expected dedent");
      ++i_;
    } else {
      parse_simple_statements(kids);
    }
    return node("block", kids);
  }

  NodeId parse_decorated() {
    Kids kids;
    while (is_op("@")) {
      Kids d{{anon(), {}}};
      d.push_back({parse_named_expression(), {}});
      expect_newline();
      kids.push_back({node("decorator", d), {}});
    }
    NodeId def;
    if (is_kw("def") || is_kw("async")) {
      def = parse_function();
    } else if (is_kw("class")) {
      def = parse_class();
    } else {
      fail("expected function or class after decorator");
    }
    kids.push_back({def, "definition"});
    return node("decorated_definition", kids);
  }

  NodeId parse_function() {
    Kids kids;
    if (is_kw("async")) kids.push_back({anon(), {}});
    kids.push_back({expect_kw("def"), {}});
    kids.push_back({identifier(), "name"});
    kids.push_back({parse_parameters(), "parameters"});
    if (is_op("->")) {
      kids.push_back({anon(), {}});
      kids.push_back({node("type", {{parse_expression(), {}}}), "return_type"});
    }
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    return node("function_definition", kids);
  }

  NodeId parse_parameters() {
    Kids kids{{expect_op("("), {}}};
    while (!is_op(")")) {
      kids.push_back({parse_parameter(true), {}});
      if (!is_op(",")) break;
      kids.push_back({anon(), {}});
    }
    kids.push_back({expect_op(")"), {}});
    return node("parameters", kids);
  }

  NodeId parse_parameter(bool annotations) {
    if (is_op("*") || is_op("**")) {
      bool dict = is_op("**");
      NodeId star = anon();
      if (!dict && (is_op(",") || is_op(")") || is_op(":"))) return star;
      NodeId name = identifier();
      NodeId pat = node(dict ? "dictionary_splat_pattern" : "list_splat_pattern",
                        {{star, {}}, {name, {}}});
      if (annotations && is_op(":")) {
        NodeId colon = anon();
        NodeId ty = node("type", {{parse_expression(), {}}});
        return node("typed_parameter", {{pat, {}}, {colon, {}}, {ty, "type"}});
      }
      return pat;
    }
    if (is_op("/")) return anon();
    NodeId name = identifier();
    NodeId colon = kNoNode;
    NodeId ty = kNoNode;
    if (annotations && is_op(":")) {
      colon = anon();
      ty = node("type", {{parse_expression(), {}}});
    }
    if (is_op("=")) {
      NodeId eq = anon();
      NodeId val = parse_expression();
      if (ty != kNoNode) {
        return node("typed_default_parameter",
                    {{name, "name"}, {colon, {}}, {ty, "type"}, {eq, {}}, {val, "value"}});
      }
      return node("default_parameter", {{name, "name"}, {eq, {}}, {val, "value"}});
    }
    if (ty != kNoNode) return node("typed_parameter", {{name, {}}, {colon, {}}, {ty, "type"}});
    return name;
  }

  NodeId parse_class() {
    Kids kids{{expect_kw("class"), {}}};
    kids.push_back({identifier(), "name"});
    if (is_op("(")) kids.push_back({parse_argument_list(), "superclasses"});
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    return node("class_definition", kids);
  }

  NodeId parse_if() {
    Kids kids{{expect_kw("if"), {}}};
    kids.push_back({parse_named_expression(), "condition"});
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "consequence"});
    while (is_kw("elif")) {
      Kids e{{anon(), {}}};
      e.push_back({parse_named_expression(), "condition"});
      e.push_back({expect_op(":"), {}});
      e.push_back({parse_block(), "consequence"});
      kids.push_back({node("elif_clause", e), "alternative"});
    }
    if (is_kw("else")) kids.push_back({parse_else(), "alternative"});
    return node("if_statement", kids);
  }

  NodeId parse_else() {
    Kids e{{expect_kw("else"), {}}};
    e.push_back({expect_op(":"), {}});
    e.push_back({parse_block(), "body"});
    return node("else_clause", e);
  }

  NodeId parse_for() {
    Kids kids;
    if (is_kw("async")) kids.push_back({anon(), {}});
    kids.push_back({expect_kw("for"), {}});
    kids.push_back({parse_targets(), "left"});
    kids.push_back({expect_kw("in"), {}});
    kids.push_back({parse_star_expressions(), "right"});
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    if (is_kw("else")) kids.push_back({parse_else(), "alternative"});
    return node("for_statement", kids);
  }

  NodeId parse_while() {
    Kids kids{{expect_kw("while"), {}}};
    kids.push_back({parse_named_expression(), "condition"});
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    if (is_kw("else")) kids.push_back({parse_else(), "alternative"});
    return node("while_statement", kids);
  }

  NodeId parse_try() {
    Kids kids{{expect_kw("try"), {}}};
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    bool handlers = false;
    while (is_kw("except")) {
      handlers = true;
      Kids e{{anon(), {}}};
      if (is_op("*")) e.push_back({anon(), {}});
      if (!is_op(":")) {
        e.push_back({parse_expression(), "value"});
        if (is_kw("as")) {
          e.push_back({anon(), {}});
          e.push_back({identifier(), "alias"});
        } else if (is_op(",")) {
          e.push_back({anon(), {}});
          e.push_back({parse_expression(), {}});
        }
      }
      e.push_back({expect_op(":"), {}});
      e.push_back({parse_block(), {}});
      kids.push_back({node("except_clause", e), {}});
    }
    if (handlers && is_kw("else")) kids.push_back({parse_else(), {}});
    if (is_kw("finally")) {
      handlers = true;
      Kids f{{anon(), {}}};
      f.push_back({expect_op(":"), {}});
      f.push_back({parse_block(), {}});
      kids.push_back({node("finally_clause", f), {}});
    }
    if (!handlers) fail("expected 'except' or 'finally'");
    return node("try_statement", kids);
  }

  NodeId parse_with() {
    Kids kids;
    if (is_kw("async")) kids.push_back({anon(), {}});
    kids.push_back({expect_kw("with"), {}});
    Kids items;
    bool paren = is_op("(") && tok_op(toks_[matching_close(i_) + 1], ":");
    if (paren) items.push_back({anon(), {}});
    for (;;) {
      if (paren && is_op(")")) break;
      Kids item{{parse_expression(), "value"}};
      if (is_kw("as")) {
        item.push_back({anon(), {}});
        item.push_back({parse_target(), "alias"});
      }
      items.push_back({node("with_item", item), {}});
      if (!is_op(",")) break;
      items.push_back({anon(), {}});
    }
    if (paren) items.push_back({expect_op(")"), {}});
    kids.push_back({node("with_clause", items), {}});
    kids.push_back({expect_op(":"), {}});
    kids.push_back({parse_block(), "body"});
    return node("with_statement", kids);
  }

  NodeId parse_simple() {
    if (is_kw("pass")) return node("pass_statement", {{anon(), {}}});
    if (is_kw("break")) return node("break_statement", {{anon(), {}}});
    if (is_kw("continue")) return node("continue_statement", {{anon(), {}}});
    if (is_kw("return")) {
      Kids k{{anon(), {}}};
      if (starts_expression()) k.push_back({parse_star_expressions(), {}});
      return node("return_statement", k);
    }
    if (is_kw("raise")) {
      Kids k{{anon(), {}}};
      if (starts_expression()) {
        k.push_back({parse_expression(), {}});
        if (is_kw("from")) {
          k.push_back({anon(), {}});
          k.push_back({parse_expression(), "cause"});
        }
      }
      return node("raise_statement", k);
    }
    if (is_kw("assert")) {
      Kids k{{anon(), {}}};
      k.push_back({parse_expression(), {}});
      if (is_op(",")) {
        k.push_back({anon(), {}});
        k.push_back({parse_expression(), {}});
      }
      return node("assert_statement", k);
    }
    if (is_kw("import")) {
      Kids k{{anon(), {}}};
      for (;;) {
        k.push_back({parse_import_name(), "name"});
        if (!is_op(",")) break;
        k.push_back({anon(), {}});
      }
      return node("import_statement", k);
    }
    if (is_kw("from")) return parse_import_from();
    if (is_kw("global") || is_kw("nonlocal")) {
      bool global = is_kw("global");
      Kids k{{anon(), {}}};
      for (;;) {
        k.push_back({identifier(), {}});
        if (!is_op(",")) break;
        k.push_back({anon(), {}});
      }
      return node(global ? "global_statement" : "nonlocal_statement", k);
    }
    if (is_kw("del")) {
      Kids k{{anon(), {}}};
      k.push_back({parse_star_expressions(), {}});
      return node("delete_statement", k);
    }
    return parse_expression_statement();
  }

  NodeId parse_dotted_name() {
    Kids k{{identifier(), {}}};
    while (is_op(".")) {
      k.push_back({anon(), {}});
      k.push_back({identifier(), {}});
    }
    return node("dotted_name", k);
  }

  NodeId parse_import_name() {
    NodeId name = parse_dotted_name();
    if (!is_kw("as")) return name;
    NodeId as = anon();
    return node("aliased_import", {{name, "name"}, {as, {}}, {identifier(), "alias"}});
  }

  NodeId parse_import_from() {
    Kids k{{anon(), {}}};
    if (is_op(".") || is_op("...")) {
      Kids rel;
      while (is_op(".") || is_op("...")) rel.push_back({anon(), {}});
      if (!is_kw("import")) rel.push_back({parse_dotted_name(), {}});
      k.push_back({node("relative_import", rel), "module_name"});
    } else {
      k.push_back({parse_dotted_name(), "module_name"});
    }
    k.push_back({expect_kw("import"), {}});
    if (is_op("*")) {
      k.push_back({node("wildcard_import", {{anon(), {}}}), {}});
      return node("import_from_statement", k);
    }
    bool paren = is_op("(");
    if (paren) k.push_back({anon(), {}});
    for (;;) {
      if (paren && is_op(")")) break;
      NodeId name = parse_dotted_name();
      if (is_kw("as")) {
        NodeId as = anon();
        name = node("aliased_import", {{name, "name"}, {as, {}}, {identifier(), "alias"}});
      }
      k.push_back({name, "name"});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    if (paren) k.push_back({expect_op(")"), {}});
    return node("import_from_statement", k);
  }

  bool at_aug_op() const {
    if (cur().kind != T::Op) return false;
    for (auto op : kAugOps) {
      if (cur().text == op) return true;
    }
    return false;
  }

  NodeId parse_rhs() {
    if (is_kw("yield")) return parse_yield();
    return parse_star_expressions();
  }

  NodeId finish_assignment(NodeId left) {
    NodeId eq = anon();
    NodeId rhs = parse_rhs();
    if (is_op("=")) rhs = finish_assignment(rhs);
    return node("assignment", {{left, "left"}, {eq, {}}, {rhs, "right"}});
  }

  NodeId parse_expression_statement() {
    NodeId e = is_kw("yield") ? parse_yield() : parse_star_expressions();
    NodeId inner = e;
    if (is_op("=")) {
      inner = finish_assignment(e);
    } else if (is_op(":")) {
      Kids k{{e, "left"}, {anon(), {}}};
      k.push_back({node("type", {{parse_expression(), {}}}), "type"});
      if (is_op("=")) {
        k.push_back({anon(), {}});
        k.push_back({parse_rhs(), "right"});
      }
      inner = node("assignment", k);
    } else if (at_aug_op()) {
      NodeId op = anon();
      NodeId rhs = parse_rhs();
      inner = node("augmented_assignment", {{e, "left"}, {op, "operator"}, {rhs, "right"}});
    }
    return node("expression_statement", {{inner, {}}});
  }

  // ---- expressions ----
  NodeId parse_yield() {
    Kids k{{expect_kw("yield"), {}}};
    if (is_kw("from")) {
      k.push_back({anon(), {}});
      k.push_back({parse_expression(), {}});
    } else if (starts_expression()) {
      k.push_back({parse_star_expressions(), {}});
    }
    return node("yield", k);
  }

  NodeId parse_star_or_expression() {
    if (is_op("*")) {
      NodeId star = anon();
      return node("list_splat", {{star, {}}, {parse_binary(0), {}}});
    }
    return parse_expression();
  }

  NodeId parse_star_expressions() {
    NodeId first = parse_star_or_expression();
    if (!is_op(",")) return first;
    Kids k{{first, {}}};
    while (is_op(",")) {
      k.push_back({anon(), {}});
      if (!starts_expression()) break;
      k.push_back({parse_star_or_expression(), {}});
    }
    return node("expression_list", k);
  }

  NodeId parse_target() {
    if (is_op("*")) {
      NodeId star = anon();
      return node("list_splat_pattern", {{star, {}}, {parse_binary(0), {}}});
    }
    return parse_binary(0);
  }

  NodeId parse_targets() {
    NodeId first = parse_target();
    if (!is_op(",")) return first;
    Kids k{{first, {}}};
    while (is_op(",")) {
      k.push_back({anon(), {}});
      if (is_kw("in") || is_op("=")) break;
      k.push_back({parse_target(), {}});
    }
    return node("pattern_list", k);
  }

  NodeId parse_named_expression() {
    if (cur().kind == T::Name && peek().kind == T::Op && peek().text == ":=") {
      NodeId name = identifier();
      NodeId op = anon();
      return node("named_expression", {{name, "name"}, {op, {}}, {parse_expression(), "value"}});
    }
    return parse_expression();
  }

  NodeId parse_expression() {
    DepthGuard g(*this);
    if (is_kw("lambda")) return parse_lambda();
    NodeId e = parse_or();
    if (is_kw("if")) {
      NodeId kw_if = anon();
      NodeId cond = parse_or();
      NodeId kw_else = expect_kw("else");
      NodeId alt = parse_expression();
      return node("conditional_expression",
                  {{e, {}}, {kw_if, {}}, {cond, {}}, {kw_else, {}}, {alt, {}}});
    }
    return e;
  }

  NodeId parse_lambda() {
    Kids k{{anon(), {}}};
    if (!is_op(":")) {
      Kids params;
      for (;;) {
        params.push_back({parse_parameter(false), {}});
        if (!is_op(",")) break;
        params.push_back({anon(), {}});
      }
      k.push_back({node("lambda_parameters", params), "parameters"});
    }
    k.push_back({expect_op(":"), {}});
    k.push_back({parse_expression(), "body"});
    return node("lambda", k);
  }

  NodeId parse_or() {
    NodeId left = parse_and();
    while (is_kw("or")) {
      NodeId op = anon();
      NodeId right = parse_and();
      left = node("boolean_operator", {{left, "left"}, {op, "operator"}, {right, "right"}});
    }
    return left;
  }

  NodeId parse_and() {
    NodeId left = parse_not();
    while (is_kw("and")) {
      NodeId op = anon();
      NodeId right = parse_not();
      left = node("boolean_operator", {{left, "left"}, {op, "operator"}, {right, "right"}});
    }
    return left;
  }

  NodeId parse_not() {
    if (is_kw("not")) {
      DepthGuard g(*this);
      NodeId op = anon();
      return node("not_operator", {{op, "operator"}, {parse_not(), "argument"}});
    }
    return parse_comparison();
  }

  // Returns kNoNode when the current token does not start a comparison
  // operator; otherwise consumes it (one or two tokens).
  NodeId take_comparison_op() {
    if (cur().kind == T::Op) {
      static const std::set<std::string_view> ops = {"<", ">", "==", ">=", "<=", "!="};
      if (ops.contains(cur().text)) return anon();
      return kNoNode;
    }
    if (is_kw("in")) return anon();
    if (is_kw("not") && tok_is_kw(peek(), "in")) {
      ByteSpan span{cur().span.start, peek().span.end};
      i_ += 2;
      return t_.add_leaf("not in", span, false);
    }
    if (is_kw("is")) {
      if (tok_is_kw(peek(), "not")) {
        ByteSpan span{cur().span.start, peek().span.end};
        i_ += 2;
        return t_.add_leaf("is not", span, false);
      }
      return anon();
    }
    return kNoNode;
  }

  NodeId parse_comparison() {
    NodeId left = parse_binary(0);
    for (;;) {
      NodeId op = take_comparison_op();
      if (op == kNoNode) break;
      NodeId right = parse_binary(0);
      left = node("comparison_operator", {{left, "left"}, {op, "operator"}, {right, "right"}});
    }
    return left;
  }

  bool at_binary_level(int level) const {
    if (cur().kind != T::Op) return false;
    std::string_view o = cur().text;
    switch (level) {
      case 0: return o == "|";
      case 1: return o == "^";
      case 2: return o == "&";
      case 3: return o == "<<" || o == ">>";
      case 4: return o == "+" || o == "-";
      case 5: return o == "*" || o == "/" || o == "//" || o == "%" || o == "@";
      default: return false;
    }
  }

  NodeId parse_binary(int level) {
    if (level == 6) return parse_factor();
    NodeId left = parse_binary(level + 1);
    while (at_binary_level(level)) {
      NodeId op = anon();
      NodeId right = parse_binary(level + 1);
      left = node("binary_operator", {{left, "left"}, {op, "operator"}, {right, "right"}});
    }
    return left;
  }

  NodeId parse_factor() {
    if (is_op("-") || is_op("+") || is_op("~")) {
      DepthGuard g(*this);
      NodeId op = anon();
      return node("unary_operator", {{op, "operator"}, {parse_factor(), "argument"}});
    }
    NodeId base = parse_await();
    if (is_op("**")) {
      NodeId op = anon();
      NodeId right = parse_factor();
      return node("binary_operator", {{base, "left"}, {op, "operator"}, {right, "right"}});
    }
    return base;
  }

  NodeId parse_await() {
    if (is_kw("await")) {
      NodeId kw = anon();
      return node("await", {{kw, {}}, {parse_primary(), {}}});
    }
    return parse_primary();
  }

  NodeId parse_primary() {
    NodeId e = parse_atom();
    for (;;) {
      if (is_op(".")) {
        NodeId dot = anon();
        NodeId attr = identifier();
        e = node("attribute", {{e, "object"}, {dot, {}}, {attr, "attribute"}});
      } else if (is_op("(")) {
        NodeId args = parse_call_arguments();
        e = node("call", {{e, "function"}, {args, "arguments"}});
      } else if (is_op("[")) {
        Kids k{{e, "value"}, {anon(), {}}};
        for (;;) {
          k.push_back({parse_subscript_item(), "subscript"});
          if (!is_op(",")) break;
          k.push_back({anon(), {}});
          if (is_op("]")) break;
        }
        k.push_back({expect_op("]"), {}});
        e = node("subscript", k);
      } else {
        return e;
      }
    }
  }

  NodeId parse_subscript_item() {
    Kids k;
    if (!is_op(":")) {
      NodeId e = parse_star_or_expression();
      if (!is_op(":")) return e;
      k.push_back({e, {}});
    }
    k.push_back({anon(), {}});
    if (!is_op(":") && !is_op("]") && !is_op(",")) k.push_back({parse_expression(), {}});
    if (is_op(":")) {
      k.push_back({anon(), {}});
      if (!is_op("]") && !is_op(",")) k.push_back({parse_expression(), {}});
    }
    return node("slice", k);
  }

  NodeId parse_call_arguments() {
    Kids k{{expect_op("("), {}}};
    bool first = true;
    while (!is_op(")")) {
      NodeId arg;
      bool plain = false;
      if (is_op("*") || is_op("**")) {
        bool dict = is_op("**");
        NodeId star = anon();
        arg = node(dict ? "dictionary_splat" : "list_splat", {{star, {}}, {parse_expression(), {}}});
      } else if (cur().kind == T::Name && !keywords().contains(cur().text) &&
                 peek().kind == T::Op && peek().text == "=") {
        NodeId name = identifier();
        NodeId eq = anon();
        arg = node("keyword_argument", {{name, "name"}, {eq, {}}, {parse_expression(), "value"}});
      } else {
        arg = parse_named_expression();
        plain = true;
      }
      if (first && plain && (is_kw("for") || is_kw("async"))) {
        Kids g{k.front(), {arg, "body"}};
        parse_comprehension_clauses(g);
        g.push_back({expect_op(")"), {}});
        return node("generator_expression", g);
      }
      first = false;
      k.push_back({arg, {}});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op(")"), {}});
    return node("argument_list", k);
  }

  NodeId parse_argument_list() { return parse_call_arguments(); }

  void parse_comprehension_clauses(Kids& k) {
    while (is_kw("for") || is_kw("async") || is_kw("if")) {
      if (is_kw("if")) {
        NodeId kw = anon();
        k.push_back({node("if_clause", {{kw, {}}, {parse_or(), {}}}), {}});
        continue;
      }
      Kids c;
      if (is_kw("async")) c.push_back({anon(), {}});
      c.push_back({expect_kw("for"), {}});
      c.push_back({parse_targets(), "left"});
      c.push_back({expect_kw("in"), {}});
      c.push_back({parse_or(), "right"});
      k.push_back({node("for_in_clause", c), {}});
    }
  }

  NodeId parse_atom() {
    DepthGuard g(*this);
    const Tok& t = cur();
    switch (t.kind) {
      case T::Number: {
        NodeId id = t_.add_leaf(t.is_float ? "float" : "integer", t.span, true);
        ++i_;
        return id;
      }
      case T::String: {
        Kids parts;
        while (cur().kind == T::String) {
          parts.push_back({t_.add_leaf("string", cur().span, true), {}});
          ++i_;
        }
        if (parts.size() == 1) return parts.front().id;
        return node("concatenated_string", parts);
      }
      case T::Name: {
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          std::string_view type = t.text == "True" ? "true" : t.text == "False" ? "false" : "none";
          NodeId id = t_.add_leaf(type, t.span, true);
          ++i_;
          return id;
        }
        return identifier();
      }
      case T::Op:
        if (t.text == "...") {
          NodeId id = t_.add_leaf("ellipsis", t.span, true);
          ++i_;
          return id;
        }
        if (t.text == "(") return parse_paren();
        if (t.text == "[") return parse_list();
        if (t.text == "{") return parse_brace();
        break;
      default:
        break;
    }
    fail("expected expression");
  }

  NodeId parse_paren() {
    Kids k{{anon(), {}}};
    if (is_op(")")) {
      k.push_back({anon(), {}});
      return node("tuple", k);
    }
    if (is_kw("yield")) {
      k.push_back({parse_yield(), {}});
      k.push_back({expect_op(")"), {}});
      return node("parenthesized_expression", k);
    }
    NodeId first = is_op("*") ? parse_star_or_expression() : parse_named_expression();
    if (is_kw("for") || is_kw("async")) {
      k.push_back({first, "body"});
      parse_comprehension_clauses(k);
      k.push_back({expect_op(")"), {}});
      return node("generator_expression", k);
    }
    k.push_back({first, {}});
    if (!is_op(",")) {
      k.push_back({expect_op(")"), {}});
      return node("parenthesized_expression", k);
    }
    while (is_op(",")) {
      k.push_back({anon(), {}});
      if (is_op(")")) break;
      k.push_back({parse_star_or_expression(), {}});
    }
    k.push_back({expect_op(")"), {}});
    return node("tuple", k);
  }

  NodeId parse_list() {
    Kids k{{anon(), {}}};
    if (!is_op("]")) {
      NodeId first = parse_star_or_expression();
      if (is_kw("for") || is_kw("async")) {
        k.push_back({first, "body"});
        parse_comprehension_clauses(k);
        k.push_back({expect_op("]"), {}});
        return node("list_comprehension", k);
      }
      k.push_back({first, {}});
      while (is_op(",")) {
        k.push_back({anon(), {}});
        if (is_op("]")) break;
        k.push_back({parse_star_or_expression(), {}});
      }
    }
    k.push_back({expect_op("]"), {}});
    return node("list", k);
  }

  NodeId parse_dict_item() {
    if (is_op("**")) {
      NodeId star = anon();
      return node("dictionary_splat", {{star, {}}, {parse_binary(0), {}}});
    }
    NodeId key = parse_expression();
    NodeId colon = expect_op(":");
    return node("pair", {{key, "key"}, {colon, {}}, {parse_expression(), "value"}});
  }

  NodeId parse_brace() {
    Kids k{{anon(), {}}};
    if (is_op("}")) {
      k.push_back({anon(), {}});
      return node("dict", k);
    }
    bool is_dict;
    NodeId first;
    if (is_op("**")) {
      is_dict = true;
      first = parse_dict_item();
    } else if (is_op("*")) {
      is_dict = false;
      first = parse_star_or_expression();
    } else {
      NodeId e = parse_expression();
      if (is_op(":")) {
        is_dict = true;
        NodeId colon = anon();
        first = node("pair", {{e, "key"}, {colon, {}}, {parse_expression(), "value"}});
      } else {
        is_dict = false;
        first = e;
      }
    }
    if (is_kw("for") || is_kw("async")) {
      k.push_back({first, "body"});
      parse_comprehension_clauses(k);
      k.push_back({expect_op("}"), {}});
      return node(is_dict ? "dictionary_comprehension" : "set_comprehension", k);
    }
    k.push_back({first, {}});
    while (is_op(",")) {
      k.push_back({anon(), {}});
      if (is_op("}")) break;
      k.push_back({is_dict ? parse_dict_item() : parse_star_or_expression(), {}});
    }
    k.push_back({expect_op("}"), {}});
    return node(is_dict ? "dict" : "set", k);
  }

  SyntaxTree& t_;
  std::vector<Tok> toks_;
  std::size_t i_ = 0;
  int depth_ = 0;
};

class PythonGrammar final : public Grammar {
 public:
  PythonGrammar()
      : Grammar("python", "1",
                {"module", "block", "function_definition", "parameters", "lambda_parameters",
                 "default_parameter", "typed_parameter", "typed_default_parameter",
                 "list_splat_pattern", "dictionary_splat_pattern", "type", "class_definition",
                 "argument_list", "decorated_definition", "decorator", "if_statement",
                 "elif_clause", "else_clause", "for_statement", "while_statement",
                 "try_statement", "except_clause", "finally_clause", "with_statement",
                 "with_clause", "with_item", "return_statement", "raise_statement",
                 "assert_statement", "pass_statement", "break_statement", "continue_statement",
                 "import_statement", "import_from_statement", "dotted_name", "aliased_import",
                 "relative_import", "wildcard_import", "global_statement",
                 "nonlocal_statement", "delete_statement", "expression_statement", "assignment",
                 "augmented_assignment", "named_expression", "binary_operator",
                 "comparison_operator", "boolean_operator", "not_operator", "unary_operator",
                 "await", "yield", "call", "attribute", "subscript", "slice", "identifier",
                 "integer", "float", "string", "concatenated_string", "true", "false", "none",
                 "ellipsis", "list", "tuple", "dict", "set", "pair", "parenthesized_expression",
                 "list_comprehension", "dictionary_comprehension", "set_comprehension",
                 "generator_expression", "for_in_clause", "if_clause", "lambda",
                 "conditional_expression", "keyword_argument", "expression_list",
                 "pattern_list", "list_splat", "dictionary_splat"},
                {"def",   "class",   "if",     "elif",   "else",   "for",     "in",
                 "while", "try",     "except", "finally", "with",  "as",      "return",
                 "raise", "from",    "assert", "pass",   "break",  "continue", "import",
                 "global", "nonlocal", "del",  "lambda", "and",    "or",      "not",
                 "is",    "is not",  "not in", "yield",  "await",  "async",   "(",
                 ")",     "[",       "]",      "{",      "}",      ",",       ":",
                 ".",     ";",       "=",      "->",     ":=",     "...",     "@",
                 "+",     "-",       "*",      "/",      "//",     "%",       "**",
                 "<<",    ">>",      "&",      "|",      "^",      "~",       "<",
                 ">",     "<=",      ">=",     "==",     "!=",     "+=",      "-=",
                 "*=",    "/=",      "//=",    "%=",     "**=",    "<<=",     ">>=",
                 "&=",    "|=",      "^=",     "@="},
                {"name", "parameters", "return_type", "body", "superclasses", "condition",
                 "consequence", "alternative", "left", "right", "operator", "argument",
                 "function", "arguments", "object", "attribute", "value", "subscript", "key",
                 "type", "definition", "alias", "cause", "module_name"}) {}

  SyntaxTree parse(std::string source) const override {
    SyntaxTree tree(this, source);
    try {
      Lexer lexer(tree.source());
      Parser parser(tree, lexer.run());
      tree.set_root(parser.parse_module());
      return tree;
    } catch (const ParseFail& f) {
      SyntaxTree broken(this, std::move(source));
      NodeId err = broken.add_leaf("ERROR", {0, broken.source().size()}, true);
      broken.set_root(broken.add_node("module", {{err, {}}}));
      broken.add_error(f.offset, f.message);
      return broken;
    }
  }
};

}  // namespace

std::unique_ptr<Grammar> make_python_grammar() { return std::make_unique<PythonGrammar>(); }

}  // namespace taskforge::syntax
