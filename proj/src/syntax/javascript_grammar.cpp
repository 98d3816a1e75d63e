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

enum class T { Name, Number, String, Template, Regex, Op, End };

struct Tok {
  T kind;
  ByteSpan span;
  std::string_view text;
  bool nl_before = false;
};

constexpr std::array<std::string_view, 49> kOps = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=", "=>", "==",
    "!=",   "<=",  ">=",  "&&",  "||",  "??",  "?.",  "++",  "--",  "+=",  "-=",  "*=",  "/=",
    "%=",   "&=",  "|=",  "^=",  "**",  "<<",  ">>",  "<",   ">",   "+",   "-",   "*",   "/",
    "%",    "&",   "|",   "^",   "!",   "~",   "?",   ":",   "=",   "."};

bool is_ident_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || c == '$' || u >= 0x80;
}
bool is_ident_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '$' || u >= 0x80;
}

const std::set<std::string_view>& reserved() {
  static const std::set<std::string_view> r = {
      "break",  "case",   "catch",      "class",  "const",  "continue", "debugger",
      "default", "delete", "do",        "else",   "export", "extends",  "finally",
      "for",    "function", "if",       "import", "in",     "instanceof", "new",
      "return", "super",  "switch",     "this",   "throw",  "try",      "typeof",
      "var",    "void",   "while",      "with",   "null",   "true",     "false"};
  return r;
}

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  std::vector<Tok> run() {
    if (s_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    if (s_.substr(pos_, 2) == "#!") {
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
    }
    bool nl = false;
    while (true) {
      skip_trivia(nl);
      if (pos_ >= s_.size()) break;
      std::size_t start = pos_;
      char c = s_[pos_];
      T kind;
      if (c == '"' || c == '\'') {
        lex_string(c);
        kind = T::String;
      } else if (c == '`') {
        pos_ = scan_template(pos_);
        kind = T::Template;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < s_.size() &&
                  std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        lex_number();
        kind = T::Number;
      } else if (is_ident_start(c) ||
                 (c == '#' && pos_ + 1 < s_.size() && is_ident_start(s_[pos_ + 1]))) {
        ++pos_;
        while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
        kind = T::Name;
      } else if (c == '/' && regex_allowed()) {
        lex_regex();
        kind = T::Regex;
      } else {
        lex_op();
        kind = T::Op;
      }
      toks_.push_back({kind, {start, pos_}, s_.substr(start, pos_ - start), nl});
      nl = false;
    }
    toks_.push_back({T::End, {s_.size(), s_.size()}, {}, true});
    return std::move(toks_);
  }

 private:
  [[noreturn]] static void fail(std::size_t at, std::string msg) {
    throw ParseFail{at, std::move(msg)};
  }

  void skip_trivia(bool& nl) {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '\n') {
        nl = true;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        ++pos_;
      } else if (s_.substr(pos_, 2) == "//") {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (s_.substr(pos_, 2) == "/*") {
        std::size_t end = s_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) fail(pos_, "unterminated comment");
        if (s_.substr(pos_, end - pos_).find('\n') != std::string_view::npos) nl = true;
        pos_ = end + 2;
      } else {
        break;
      }
    }
  }

  bool regex_allowed() const {
    if (toks_.empty()) return true;
    const Tok& p = toks_.back();
    switch (p.kind) {
      case T::Number:
      case T::String:
      case T::Template:
      case T::Regex:
        return false;
      case T::Name: {
        static const std::set<std::string_view> before_expr = {
            "return", "typeof", "instanceof", "in",   "of",   "new",  "delete",
            "void",   "throw",  "case",       "do",   "else", "yield", "await"};
        return before_expr.contains(p.text);
      }
      case T::Op:
        return p.text != ")" && p.text != "]" && p.text != "}";
      default:
        return true;
    }
  }

  void lex_string(char q) {
    std::size_t start = pos_++;
    while (true) {
      if (pos_ >= s_.size() || s_[pos_] == '\n') fail(start, "unterminated string literal");
      char c = s_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      ++pos_;
      if (c == q) return;
    }
  }

  // Returns the offset one past the closing backtick of the template
  // starting at `p`, descending into ${...} substitutions.
  std::size_t scan_template(std::size_t p) {
    std::size_t start = p++;
    while (true) {
      if (p >= s_.size()) fail(start, "unterminated template literal");
      char c = s_[p];
      if (c == '\\') {
        p += 2;
      } else if (c == '`') {
        return p + 1;
      } else if (c == '$' && p + 1 < s_.size() && s_[p + 1] == '{') {
        p = scan_substitution(p + 2);
      } else {
        ++p;
      }
    }
  }

  std::size_t scan_substitution(std::size_t p) {
    int depth = 1;
    while (true) {
      if (p >= s_.size()) fail(p, "unterminated template substitution");
      char c = s_[p];
      if (c == '{') {
        ++depth;
        ++p;
      } else if (c == '}') {
        if (--depth == 0) return p + 1;
        ++p;
      } else if (c == '`') {
        p = scan_template(p);
      } else if (c == '"' || c == '\'') {
        std::size_t save = pos_;
        pos_ = p;
        lex_string(c);
        p = pos_;
        pos_ = save;
      } else {
        ++p;
      }
    }
  }

  void lex_number() {
    std::size_t start = pos_;
    if (s_[pos_] == '0' && pos_ + 1 < s_.size() &&
        (s_[pos_ + 1] == 'x' || s_[pos_ + 1] == 'X' || s_[pos_ + 1] == 'o' ||
         s_[pos_ + 1] == 'O' || s_[pos_ + 1] == 'b' || s_[pos_ + 1] == 'B')) {
      pos_ += 2;
      while (pos_ < s_.size() &&
             (std::isxdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
    } else {
      auto digits = [&] {
        while (pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
          ++pos_;
        }
      };
      digits();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        digits();
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
        if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
          pos_ = p;
          digits();
        }
      }
    }
    if (pos_ < s_.size() && s_[pos_] == 'n') ++pos_;
    if (pos_ < s_.size() && is_ident_char(s_[pos_])) fail(start, "invalid number literal");
  }

  void lex_regex() {
    std::size_t start = pos_++;
    bool in_class = false;
    while (true) {
      if (pos_ >= s_.size() || s_[pos_] == '\n') fail(start, "unterminated regex literal");
      char c = s_[pos_++];
      if (c == '\\') {
        ++pos_;
      } else if (c == '[') {
        in_class = true;
      } else if (c == ']') {
        in_class = false;
      } else if (c == '/' && !in_class) {
        break;
      }
    }
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
  }

  void lex_op() {
    char c = s_[pos_];
    if (std::string_view("{}()[];,@").find(c) != std::string_view::npos) {
      ++pos_;
      return;
    }
    for (std::string_view op : kOps) {
      if (s_.substr(pos_, op.size()) == op) {
        if (op == "?." && pos_ + 2 < s_.size() &&
            std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
          continue;
        }
        pos_ += op.size();
        return;
      }
    }
    fail(pos_, std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<Tok> toks_;
};

constexpr std::array<std::string_view, 16> kAssignOps = {
    "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "&&=",
    "||=", "?\?="};

class Parser {
 public:
  Parser(SyntaxTree& t, std::vector<Tok> toks) : t_(t), toks_(std::move(toks)) {}

  NodeId parse_program() {
    Kids kids;
    while (cur().kind != T::End) kids.push_back({parse_statement(), {}});
    return t_.add_node("program", kids, {0, 0});
  }

 private:
  const Tok& cur() const { return toks_[i_]; }
  const Tok& peek(std::size_t k = 1) const {
    return toks_[std::min(i_ + k, toks_.size() - 1)];
  }
  bool is_op(std::string_view o) const { return cur().kind == T::Op && cur().text == o; }
  bool is_kw(std::string_view k) const { return cur().kind == T::Name && cur().text == k; }
  static bool tok_op(const Tok& t, std::string_view o) { return t.kind == T::Op && t.text == o; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseFail{cur().span.start, msg};
  }

  NodeId anon() {
    NodeId id = t_.add_leaf(cur().text, cur().span, false);
    ++i_;
    return id;
  }
  NodeId leaf(std::string_view type) {
    NodeId id = t_.add_leaf(type, cur().span, true);
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
  NodeId identifier() {
    if (cur().kind != T::Name || reserved().contains(cur().text) || cur().text[0] == '#') {
      fail("expected identifier");
    }
    return leaf("identifier");
  }
  NodeId property_name() {
    if (cur().kind == T::Name) {
      return leaf(cur().text[0] == '#' ? "private_property_identifier" : "property_identifier");
    }
    fail("expected property name");
  }
  NodeId node(std::string_view type, const Kids& kids) { return t_.add_node(type, kids); }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > 400) p_.fail("nesting too deep");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  // Automatic semicolon insertion, simplified: a statement may end at ';',
  // before '}', at end of input, or where a line break separates tokens.
  void end_statement(Kids& k) {
    if (is_op(";")) {
      k.push_back({anon(), {}});
      return;
    }
    if (is_op("}") || cur().kind == T::End || cur().nl_before) return;
    fail("expected ';'");
  }

  // ---- statements ----
  NodeId parse_statement() {
    DepthGuard g(*this);
    if (is_op("{")) return parse_block();
    if (is_op(";")) return node("empty_statement", {{anon(), {}}});
    if (cur().kind == T::Name) {
      std::string_view w = cur().text;
      if (w == "var" || w == "const" ||
          (w == "let" && (peek().kind == T::Name || tok_op(peek(), "[") || tok_op(peek(), "{")))) {
        Kids k;
        NodeId d = parse_declaration(false, k);
        return d;
      }
      if (w == "function" || (w == "async" && peek().kind == T::Name &&
                              peek().text == "function" && !peek().nl_before)) {
        return parse_function(true);
      }
      if (w == "class") return parse_class(true);
      if (w == "if") return parse_if();
      if (w == "for") return parse_for();
      if (w == "while") {
        Kids k{{anon(), {}}};
        k.push_back({parse_paren_expression(), "condition"});
        k.push_back({parse_statement(), "body"});
        return node("while_statement", k);
      }
      if (w == "do") {
        Kids k{{anon(), {}}};
        k.push_back({parse_statement(), "body"});
        k.push_back({expect_kw("while"), {}});
        k.push_back({parse_paren_expression(), "condition"});
        if (is_op(";")) k.push_back({anon(), {}});
        return node("do_statement", k);
      }
      if (w == "try") return parse_try();
      if (w == "switch") return parse_switch();
      if (w == "return" || w == "throw") {
        bool ret = w == "return";
        Kids k{{anon(), {}}};
        if (!ret || (!is_op(";") && !is_op("}") && cur().kind != T::End && !cur().nl_before)) {
          if (!ret && cur().nl_before) fail("illegal newline after throw");
          k.push_back({parse_expression(false), {}});
        }
        end_statement(k);
        return node(ret ? "return_statement" : "throw_statement", k);
      }
      if (w == "break" || w == "continue") {
        bool brk = w == "break";
        Kids k{{anon(), {}}};
        if (cur().kind == T::Name && !cur().nl_before && !reserved().contains(cur().text)) {
          k.push_back({leaf("statement_identifier"), "label"});
        }
        end_statement(k);
        return node(brk ? "break_statement" : "continue_statement", k);
      }
      if (w == "import" && !tok_op(peek(), "(") && !tok_op(peek(), ".")) return parse_import();
      if (w == "export") return parse_export();
      if (tok_op(peek(), ":") && !reserved().contains(w)) {
        Kids k{{leaf("statement_identifier"), "label"}, {anon(), {}}};
        k.push_back({parse_statement(), "body"});
        return node("labeled_statement", k);
      }
    }
    Kids k{{parse_expression(false), {}}};
    end_statement(k);
    return node("expression_statement", k);
  }

  NodeId module_source() {
    if (cur().kind != T::String) fail("expected module specifier");
    return leaf("string");
  }

  NodeId parse_specifiers(std::string_view list_type, std::string_view item_type) {
    Kids k{{expect_op("{"), {}}};
    while (!is_op("}")) {
      Kids spec;
      spec.push_back({cur().kind == T::String ? leaf("string") : leaf("identifier"), "name"});
      if (is_kw("as")) {
        spec.push_back({anon(), {}});
        spec.push_back({cur().kind == T::String ? leaf("string") : leaf("identifier"), "alias"});
      }
      k.push_back({node(item_type, spec), {}});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op("}"), {}});
    return node(list_type, k);
  }

  NodeId parse_import() {
    Kids k{{anon(), {}}};
    if (cur().kind != T::String) {
      Kids clause;
      if (cur().kind == T::Name) {
        clause.push_back({identifier(), {}});
        if (is_op(",")) clause.push_back({anon(), {}});
      }
      if (is_op("*")) {
        NodeId star = anon();
        NodeId as = expect_kw("as");
        clause.push_back({node("namespace_import", {{star, {}}, {as, {}}, {identifier(), {}}}), {}});
      } else if (is_op("{")) {
        clause.push_back({parse_specifiers("named_imports", "import_specifier"), {}});
      }
      if (clause.empty()) fail("expected import clause");
      k.push_back({node("import_clause", clause), {}});
      k.push_back({expect_kw("from"), {}});
    }
    k.push_back({module_source(), "source"});
    end_statement(k);
    return node("import_statement", k);
  }

  NodeId parse_export() {
    Kids k{{anon(), {}}};
    if (is_kw("default")) {
      k.push_back({anon(), {}});
      if (is_kw("function") || (is_kw("async") && peek().kind == T::Name && peek().text == "function")) {
        k.push_back({parse_function(true, true), "declaration"});
      } else if (is_kw("class")) {
        k.push_back({parse_class(true, true), "declaration"});
      } else {
        k.push_back({parse_expression(false), "value"});
        end_statement(k);
      }
      return node("export_statement", k);
    }
    if (is_op("*")) {
      k.push_back({anon(), {}});
      if (is_kw("as")) {
        k.push_back({anon(), {}});
        k.push_back({cur().kind == T::String ? leaf("string") : leaf("identifier"), {}});
      }
      k.push_back({expect_kw("from"), {}});
      k.push_back({module_source(), "source"});
      end_statement(k);
      return node("export_statement", k);
    }
    if (is_op("{")) {
      k.push_back({parse_specifiers("export_clause", "export_specifier"), {}});
      if (is_kw("from")) {
        k.push_back({anon(), {}});
        k.push_back({module_source(), "source"});
      }
      end_statement(k);
      return node("export_statement", k);
    }
    k.push_back({parse_statement(), "declaration"});
    return node("export_statement", k);
  }

  NodeId parse_block() {
    Kids k{{expect_op("{"), {}}};
    while (!is_op("}")) {
      if (cur().kind == T::End) fail("expected '}'");
      k.push_back({parse_statement(), {}});
    }
    k.push_back({anon(), {}});
    return node("statement_block", k);
  }

  NodeId parse_declaration(bool no_in, Kids& k) {
    bool var = is_kw("var");
    k.push_back({anon(), "kind"});
    for (;;) {
      Kids d{{parse_binding(), "name"}};
      if (is_op("=")) {
        d.push_back({anon(), {}});
        d.push_back({parse_assignment(no_in), "value"});
      }
      k.push_back({node("variable_declarator", d), {}});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    end_statement(k);
    return node(var ? "variable_declaration" : "lexical_declaration", k);
  }

  NodeId parse_binding() {
    if (is_op("{")) return parse_object();
    if (is_op("[")) return parse_array();
    return identifier();
  }

  NodeId parse_function(bool declaration, bool name_optional = false) {
    Kids k;
    if (is_kw("async")) k.push_back({anon(), {}});
    k.push_back({expect_kw("function"), {}});
    bool generator = false;
    if (is_op("*")) {
      generator = true;
      k.push_back({anon(), {}});
    }
    if (declaration || (cur().kind == T::Name && !is_op("("))) {
      if (cur().kind == T::Name) k.push_back({identifier(), "name"});
      else if (declaration && !name_optional) fail("expected function name");
    }
    k.push_back({parse_formal_parameters(), "parameters"});
    k.push_back({parse_block(), "body"});
    if (declaration) {
      return node(generator ? "generator_function_declaration" : "function_declaration", k);
    }
    return node(generator ? "generator_function" : "function_expression", k);
  }

  NodeId parse_formal_parameters() {
    Kids k{{expect_op("("), {}}};
    while (!is_op(")")) {
      k.push_back({parse_parameter(), {}});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op(")"), {}});
    return node("formal_parameters", k);
  }

  NodeId parse_parameter() {
    if (is_op("...")) {
      NodeId dots = anon();
      return node("rest_pattern", {{dots, {}}, {parse_binding(), {}}});
    }
    NodeId target = parse_binding();
    if (!is_op("=")) return target;
    NodeId eq = anon();
    return node("assignment_pattern", {{target, "left"}, {eq, {}}, {parse_assignment(false), "right"}});
  }

  NodeId parse_class(bool declaration, bool name_optional = false) {
    Kids k{{expect_kw("class"), {}}};
    if (cur().kind == T::Name && !is_kw("extends")) {
      k.push_back({identifier(), "name"});
    } else if (declaration && !name_optional) {
      fail("expected class name");
    }
    if (is_kw("extends")) {
      NodeId ext = anon();
      k.push_back({node("class_heritage", {{ext, {}}, {parse_lhs(), {}}}), {}});
    }
    k.push_back({parse_class_body(), "body"});
    return node(declaration ? "class_declaration" : "class", k);
  }

  bool is_modifier_word(std::string_view w) const {
    if (!is_kw(w)) return false;
    const Tok& n = peek();
    if (n.kind == T::Op) return n.text == "[" || n.text == "*";
    return n.kind == T::Name || n.kind == T::String || n.kind == T::Number;
  }

  NodeId parse_member_name() {
    if (cur().kind == T::String) return leaf("string");
    if (cur().kind == T::Number) return leaf("number");
    if (is_op("[")) {
      NodeId open = anon();
      NodeId e = parse_assignment(false);
      return node("computed_property_name", {{open, {}}, {e, {}}, {expect_op("]"), {}}});
    }
    return property_name();
  }

  NodeId parse_class_body() {
    Kids k{{expect_op("{"), {}}};
    while (!is_op("}")) {
      if (cur().kind == T::End) fail("expected '}'");
      if (is_op(";")) {
        k.push_back({anon(), {}});
        continue;
      }
      if (is_kw("static") && tok_op(peek(), "{")) {
        NodeId kw = anon();
        k.push_back({node("class_static_block", {{kw, {}}, {parse_block(), "body"}}), {}});
        continue;
      }
      Kids m;
      if (is_modifier_word("static")) m.push_back({anon(), {}});
      if (is_modifier_word("async") && !peek().nl_before) m.push_back({anon(), {}});
      if (is_modifier_word("get") || is_modifier_word("set")) m.push_back({anon(), {}});
      if (is_op("*")) m.push_back({anon(), {}});
      NodeId name = parse_member_name();
      if (is_op("(")) {
        m.push_back({name, "name"});
        m.push_back({parse_formal_parameters(), "parameters"});
        m.push_back({parse_block(), "body"});
        k.push_back({node("method_definition", m), {}});
        continue;
      }
      m.push_back({name, "property"});
      if (is_op("=")) {
        m.push_back({anon(), {}});
        m.push_back({parse_assignment(false), "value"});
      }
      end_statement(m);
      k.push_back({node("field_definition", m), {}});
    }
    k.push_back({anon(), {}});
    return node("class_body", k);
  }

  NodeId parse_paren_expression() {
    Kids k{{expect_op("("), {}}};
    k.push_back({parse_expression(false), {}});
    k.push_back({expect_op(")"), {}});
    return node("parenthesized_expression", k);
  }

  NodeId parse_if() {
    Kids k{{anon(), {}}};
    k.push_back({parse_paren_expression(), "condition"});
    k.push_back({parse_statement(), "consequence"});
    if (is_kw("else")) {
      NodeId kw = anon();
      k.push_back({node("else_clause", {{kw, {}}, {parse_statement(), {}}}), "alternative"});
    }
    return node("if_statement", k);
  }

  NodeId parse_for() {
    Kids k{{anon(), {}}};
    if (is_kw("await")) k.push_back({anon(), {}});
    k.push_back({expect_op("("), {}});
    if (is_kw("var") || is_kw("let") || is_kw("const")) {
      std::size_t save = i_;
      NodeId kind = anon();
      NodeId target = parse_binding();
      if (is_kw("in") || is_kw("of")) {
        return finish_for_in(k, kind, target);
      }
      i_ = save;
      Kids d;
      k.push_back({parse_declaration(true, d), "initializer"});
      if (t_.node(k.back().id).children.empty() ||
          t_.text(t_.node(k.back().id).children.back()) != ";") {
        fail("expected ';'");
      }
    } else if (is_op(";")) {
      k.push_back({node("empty_statement", {{anon(), {}}}), "initializer"});
    } else {
      NodeId e = parse_expression(true);
      if (is_kw("in") || is_kw("of")) return finish_for_in(k, kNoNode, e);
      NodeId semi = expect_op(";");
      k.push_back({node("expression_statement", {{e, {}}, {semi, {}}}), "initializer"});
    }
    if (is_op(";")) {
      k.push_back({node("empty_statement", {{anon(), {}}}), "condition"});
    } else {
      NodeId e = parse_expression(false);
      NodeId semi = expect_op(";");
      k.push_back({node("expression_statement", {{e, {}}, {semi, {}}}), "condition"});
    }
    if (!is_op(")")) k.push_back({parse_expression(false), "increment"});
    k.push_back({expect_op(")"), {}});
    k.push_back({parse_statement(), "body"});
    return node("for_statement", k);
  }

  NodeId finish_for_in(Kids& k, NodeId kind, NodeId left) {
    if (kind != kNoNode) k.push_back({kind, "kind"});
    k.push_back({left, "left"});
    k.push_back({anon(), "operator"});
    k.push_back({parse_expression(false), "right"});
    k.push_back({expect_op(")"), {}});
    k.push_back({parse_statement(), "body"});
    return node("for_in_statement", k);
  }

  NodeId parse_try() {
    Kids k{{anon(), {}}};
    k.push_back({parse_block(), "body"});
    bool any = false;
    if (is_kw("catch")) {
      any = true;
      Kids c{{anon(), {}}};
      if (is_op("(")) {
        c.push_back({anon(), {}});
        c.push_back({parse_binding(), "parameter"});
        c.push_back({expect_op(")"), {}});
      }
      c.push_back({parse_block(), "body"});
      k.push_back({node("catch_clause", c), "handler"});
    }
    if (is_kw("finally")) {
      any = true;
      NodeId kw = anon();
      k.push_back({node("finally_clause", {{kw, {}}, {parse_block(), "body"}}), "finalizer"});
    }
    if (!any) fail("expected 'catch' or 'finally'");
    return node("try_statement", k);
  }

  NodeId parse_switch() {
    Kids k{{anon(), {}}};
    k.push_back({parse_paren_expression(), "value"});
    Kids body{{expect_op("{"), {}}};
    while (!is_op("}")) {
      Kids c;
      bool is_default = is_kw("default");
      if (is_default) {
        c.push_back({anon(), {}});
      } else {
        c.push_back({expect_kw("case"), {}});
        c.push_back({parse_expression(false), "value"});
      }
      c.push_back({expect_op(":"), {}});
      while (!is_kw("case") && !is_kw("default") && !is_op("}")) {
        if (cur().kind == T::End) fail("expected '}'");
        c.push_back({parse_statement(), "body"});
      }
      body.push_back({node(is_default ? "switch_default" : "switch_case", c), {}});
    }
    body.push_back({anon(), {}});
    k.push_back({node("switch_body", body), "body"});
    return node("switch_statement", k);
  }

  // ---- expressions ----
  NodeId parse_expression(bool no_in) {
    NodeId first = parse_assignment(no_in);
    if (!is_op(",")) return first;
    Kids k{{first, {}}};
    while (is_op(",")) {
      k.push_back({anon(), {}});
      k.push_back({parse_assignment(no_in), {}});
    }
    return node("sequence_expression", k);
  }

  bool at_assign_op() const {
    if (cur().kind != T::Op) return false;
    for (auto op : kAssignOps) {
      if (cur().text == op) return true;
    }
    return false;
  }

  // True when the tokens at the cursor start an arrow function.
  bool at_arrow() const {
    std::size_t j = i_;
    if (toks_[j].kind == T::Name && toks_[j].text == "async" && j + 1 < toks_.size() &&
        !toks_[j + 1].nl_before &&
        (toks_[j + 1].kind == T::Name || tok_op(toks_[j + 1], "("))) {
      if (toks_[j + 1].kind == T::Name) return tok_op(toks_[std::min(j + 2, toks_.size() - 1)], "=>");
      ++j;
    }
    if (toks_[j].kind == T::Name && !reserved().contains(toks_[j].text)) {
      return tok_op(toks_[std::min(j + 1, toks_.size() - 1)], "=>");
    }
    if (!tok_op(toks_[j], "(")) return false;
    int depth = 0;
    for (; j < toks_.size(); ++j) {
      const Tok& t = toks_[j];
      if (t.kind == T::End) return false;
      if (t.kind != T::Op) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") {
        if (--depth == 0) {
          return j + 1 < toks_.size() && tok_op(toks_[j + 1], "=>") && !toks_[j + 1].nl_before;
        }
      }
    }
    return false;
  }

  NodeId parse_arrow(bool no_in) {
    Kids k;
    if (is_kw("async")) k.push_back({anon(), {}});
    if (is_op("(")) {
      k.push_back({parse_formal_parameters(), "parameters"});
    } else {
      k.push_back({identifier(), "parameter"});
    }
    k.push_back({expect_op("=>"), {}});
    if (is_op("{")) {
      k.push_back({parse_block(), "body"});
    } else {
      k.push_back({parse_assignment(no_in), "body"});
    }
    return node("arrow_function", k);
  }

  NodeId parse_assignment(bool no_in) {
    DepthGuard g(*this);
    if (at_arrow()) return parse_arrow(no_in);
    if (is_kw("yield")) {
      Kids k{{anon(), {}}};
      if (is_op("*")) k.push_back({anon(), {}});
      if (!cur().nl_before && !is_op(")") && !is_op("]") && !is_op("}") && !is_op(",") &&
          !is_op(";") && !is_op(":") && cur().kind != T::End) {
        k.push_back({parse_assignment(no_in), {}});
      }
      return node("yield_expression", k);
    }
    NodeId left = parse_ternary(no_in);
    if (!at_assign_op()) return left;
    bool plain = is_op("=");
    NodeId op = anon();
    NodeId right = parse_assignment(no_in);
    if (plain) return node("assignment_expression", {{left, "left"}, {op, {}}, {right, "right"}});
    return node("augmented_assignment_expression",
                {{left, "left"}, {op, "operator"}, {right, "right"}});
  }

  NodeId parse_ternary(bool no_in) {
    NodeId cond = parse_binary(0, no_in);
    if (!is_op("?")) return cond;
    NodeId q = anon();
    NodeId cons = parse_assignment(false);
    NodeId colon = expect_op(":");
    NodeId alt = parse_assignment(no_in);
    return node("ternary_expression", {{cond, "condition"},
                                       {q, {}},
                                       {cons, "consequence"},
                                       {colon, {}},
                                       {alt, "alternative"}});
  }

  bool at_binary_level(int level, bool no_in) const {
    const Tok& t = cur();
    if (t.kind == T::Name) {
      if (level != 7) return false;
      return t.text == "instanceof" || (t.text == "in" && !no_in);
    }
    if (t.kind != T::Op) return false;
    std::string_view o = t.text;
    switch (level) {
      case 0: return o == "??";
      case 1: return o == "||";
      case 2: return o == "&&";
      case 3: return o == "|";
      case 4: return o == "^";
      case 5: return o == "&";
      case 6: return o == "==" || o == "!=" || o == "===" || o == "!==";
      case 7: return o == "<" || o == ">" || o == "<=" || o == ">=";
      case 8: return o == "<<" || o == ">>" || o == ">>>";
      case 9: return o == "+" || o == "-";
      case 10: return o == "*" || o == "/" || o == "%";
      default: return false;
    }
  }

  NodeId parse_binary(int level, bool no_in) {
    if (level == 11) return parse_unary();
    NodeId left = parse_binary(level + 1, no_in);
    while (at_binary_level(level, no_in)) {
      NodeId op = anon();
      NodeId right = parse_binary(level + 1, no_in);
      left = node("binary_expression", {{left, "left"}, {op, "operator"}, {right, "right"}});
    }
    return left;
  }

  NodeId parse_unary() {
    DepthGuard g(*this);
    if (is_op("!") || is_op("~") || is_op("+") || is_op("-") || is_kw("typeof") ||
        is_kw("void") || is_kw("delete")) {
      NodeId op = anon();
      return node("unary_expression", {{op, "operator"}, {parse_unary(), "argument"}});
    }
    if (is_kw("await") && !(peek().kind == T::Op && (peek().text == ")" || peek().text == ";" ||
                                                     peek().text == "," || peek().text == "="))) {
      NodeId kw = anon();
      return node("await_expression", {{kw, {}}, {parse_unary(), {}}});
    }
    if (is_op("++") || is_op("--")) {
      NodeId op = anon();
      return node("update_expression", {{op, "operator"}, {parse_unary(), "argument"}});
    }
    NodeId base = parse_postfix();
    if (is_op("**")) {
      NodeId op = anon();
      NodeId right = parse_unary();
      return node("binary_expression", {{base, "left"}, {op, "operator"}, {right, "right"}});
    }
    return base;
  }

  NodeId parse_postfix() {
    NodeId e = parse_lhs();
    if ((is_op("++") || is_op("--")) && !cur().nl_before) {
      NodeId op = anon();
      return node("update_expression", {{e, "argument"}, {op, "operator"}});
    }
    return e;
  }

  NodeId parse_arguments() {
    Kids k{{expect_op("("), {}}};
    while (!is_op(")")) {
      if (is_op("...")) {
        NodeId dots = anon();
        k.push_back({node("spread_element", {{dots, {}}, {parse_assignment(false), {}}}), {}});
      } else {
        k.push_back({parse_assignment(false), {}});
      }
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op(")"), {}});
    return node("arguments", k);
  }

  NodeId parse_new() {
    NodeId kw = anon();
    NodeId ctor = is_kw("new") ? parse_new() : parse_primary();
    for (;;) {
      if (is_op(".")) {
        NodeId dot = anon();
        ctor = node("member_expression", {{ctor, "object"}, {dot, {}}, {property_name(), "property"}});
      } else if (is_op("[")) {
        NodeId open = anon();
        NodeId idx = parse_expression(false);
        ctor = node("subscript_expression",
                    {{ctor, "object"}, {open, {}}, {idx, "index"}, {expect_op("]"), {}}});
      } else {
        break;
      }
    }
    Kids k{{kw, {}}, {ctor, "constructor"}};
    if (is_op("(")) k.push_back({parse_arguments(), "arguments"});
    return node("new_expression", k);
  }

  NodeId parse_lhs() {
    NodeId e = is_kw("new") ? parse_new() : parse_primary();
    for (;;) {
      if (is_op(".") || is_op("?.")) {
        NodeId dot = anon();
        if (tok_op(toks_[i_ - 1], "?.") && is_op("(")) {
          e = node("call_expression", {{e, "function"}, {dot, {}}, {parse_arguments(), "arguments"}});
        } else if (tok_op(toks_[i_ - 1], "?.") && is_op("[")) {
          NodeId open = anon();
          NodeId idx = parse_expression(false);
          e = node("subscript_expression",
                   {{e, "object"}, {dot, {}}, {open, {}}, {idx, "index"}, {expect_op("]"), {}}});
        } else {
          e = node("member_expression", {{e, "object"}, {dot, {}}, {property_name(), "property"}});
        }
      } else if (is_op("[")) {
        NodeId open = anon();
        NodeId idx = parse_expression(false);
        e = node("subscript_expression",
                 {{e, "object"}, {open, {}}, {idx, "index"}, {expect_op("]"), {}}});
      } else if (is_op("(")) {
        e = node("call_expression", {{e, "function"}, {parse_arguments(), "arguments"}});
      } else if (cur().kind == T::Template) {
        e = node("call_expression", {{e, "function"}, {leaf("template_string"), "arguments"}});
      } else {
        return e;
      }
    }
  }

  NodeId parse_primary() {
    DepthGuard g(*this);
    const Tok& t = cur();
    switch (t.kind) {
      case T::Number: return leaf("number");
      case T::String: return leaf("string");
      case T::Template: return leaf("template_string");
      case T::Regex: return leaf("regex");
      case T::Name: {
        std::string_view w = t.text;
        if (w == "this" || w == "super" || w == "true" || w == "false" || w == "null" ||
            w == "import") {
          return leaf(w);
        }
        if (w == "function" || (w == "async" && peek().kind == T::Name &&
                                peek().text == "function" && !peek().nl_before)) {
          return parse_function(false);
        }
        if (w == "class") return parse_class(false);
        return identifier();
      }
      case T::Op:
        if (t.text == "(") {
          Kids k{{anon(), {}}};
          k.push_back({parse_expression(false), {}});
          k.push_back({expect_op(")"), {}});
          return node("parenthesized_expression", k);
        }
        if (t.text == "[") return parse_array();
        if (t.text == "{") return parse_object();
        break;
      default:
        break;
    }
    fail("expected expression");
  }

  NodeId parse_array() {
    Kids k{{expect_op("["), {}}};
    while (!is_op("]")) {
      if (is_op(",")) {
        k.push_back({anon(), {}});
        continue;
      }
      if (is_op("...")) {
        NodeId dots = anon();
        k.push_back({node("spread_element", {{dots, {}}, {parse_assignment(false), {}}}), {}});
      } else {
        k.push_back({parse_assignment(false), {}});
      }
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op("]"), {}});
    return node("array", k);
  }

  NodeId parse_object() {
    Kids k{{expect_op("{"), {}}};
    while (!is_op("}")) {
      if (cur().kind == T::End) fail("expected '}'");
      k.push_back({parse_object_member(), {}});
      if (!is_op(",")) break;
      k.push_back({anon(), {}});
    }
    k.push_back({expect_op("}"), {}});
    return node("object", k);
  }

  NodeId parse_object_member() {
    if (is_op("...")) {
      NodeId dots = anon();
      return node("spread_element", {{dots, {}}, {parse_assignment(false), {}}});
    }
    Kids m;
    if (is_modifier_word("async") && !peek().nl_before) m.push_back({anon(), {}});
    if (is_modifier_word("get") || is_modifier_word("set")) m.push_back({anon(), {}});
    if (is_op("*")) m.push_back({anon(), {}});
    bool shorthand_ok = m.empty() && cur().kind == T::Name && cur().text[0] != '#';
    if (shorthand_ok && (tok_op(peek(), ",") || tok_op(peek(), "}") || tok_op(peek(), "="))) {
      if (reserved().contains(cur().text)) fail("unexpected reserved word");
      NodeId id = leaf("shorthand_property_identifier");
      if (!is_op("=")) return id;
      NodeId eq = anon();
      return node("assignment_pattern", {{id, "left"}, {eq, {}}, {parse_assignment(false), "right"}});
    }
    NodeId key = parse_member_name();
    if (is_op("(")) {
      m.push_back({key, "name"});
      m.push_back({parse_formal_parameters(), "parameters"});
      m.push_back({parse_block(), "body"});
      return node("method_definition", m);
    }
    if (!m.empty()) fail("expected '('");
    NodeId colon = expect_op(":");
    return node("pair", {{key, "key"}, {colon, {}}, {parse_assignment(false), "value"}});
  }

  SyntaxTree& t_;
  std::vector<Tok> toks_;
  std::size_t i_ = 0;
  int depth_ = 0;
};

class JavascriptGrammar final : public Grammar {
 public:
  JavascriptGrammar()
      : Grammar(
            "javascript", "1",
            {"program", "function_declaration", "generator_function_declaration",
             "function_expression", "generator_function", "arrow_function", "formal_parameters",
             "assignment_pattern", "rest_pattern", "class_declaration", "class",
             "class_heritage", "class_body", "method_definition", "field_definition",
             "statement_block", "lexical_declaration", "variable_declaration",
             "variable_declarator", "expression_statement", "empty_statement", "if_statement",
             "else_clause", "for_statement", "for_in_statement", "while_statement",
             "do_statement", "try_statement", "catch_clause", "finally_clause",
             "switch_statement", "switch_body", "switch_case", "switch_default",
             "return_statement", "throw_statement", "break_statement", "continue_statement",
             "labeled_statement", "statement_identifier", "binary_expression",
             "assignment_expression", "augmented_assignment_expression", "ternary_expression",
             "unary_expression", "update_expression", "call_expression", "new_expression",
             "member_expression", "subscript_expression", "arguments",
             "parenthesized_expression", "sequence_expression", "await_expression",
             "yield_expression", "spread_element", "identifier", "property_identifier",
             "private_property_identifier", "shorthand_property_identifier",
             "computed_property_name", "this", "super", "import_statement", "import_clause",
             "named_imports", "import_specifier", "namespace_import", "export_statement",
             "export_clause", "export_specifier", "class_static_block", "import", "number", "string", "template_string",
             "regex", "true", "false", "null", "object", "pair", "array"},
            {"function", "class",  "extends", "var",      "let",    "const",  "if",
             "else",     "for",    "in",      "of",       "while",  "do",     "try",
             "catch",    "finally", "switch", "case",     "default", "return", "throw",
             "break",    "continue", "new",   "typeof",   "void",   "delete", "instanceof",
             "await",    "yield",  "async",   "static",   "get",    "set",    "{", "import", "export",
             "from", "as",
             "}",        "(",      ")",       "[",        "]",      ";",      ",",
             "@",        ">>>=",   "...",     "===",      "!==",    "**=",    "<<=",
             ">>=",      ">>>",    "&&=",     "||=",      "?\?=",    "=>",     "==",
             "!=",       "<=",     ">=",      "&&",       "||",     "??",     "?.",
             "++",       "--",     "+=",      "-=",       "*=",     "/=",     "%=",
             "&=",       "|=",     "^=",      "**",       "<<",     ">>",     "<",
             ">",        "+",      "-",       "*",        "/",      "%",      "&",
             "|",        "^",      "!",       "~",        "?",      ":",      "=",
             "."},
            {"name", "parameters", "parameter", "body", "condition", "consequence",
             "alternative", "initializer", "increment", "left", "right", "operator", "argument",
             "function", "arguments", "constructor", "object", "property", "index", "key",
             "value", "label", "handler", "finalizer", "kind", "source", "declaration", "alias"}) {}

  SyntaxTree parse(std::string source) const override {
    SyntaxTree tree(this, source);
    try {
      Lexer lexer(tree.source());
      Parser parser(tree, lexer.run());
      tree.set_root(parser.parse_program());
      return tree;
    } catch (const ParseFail& f) {
      SyntaxTree broken(this, std::move(source));
      NodeId err = broken.add_leaf("ERROR", {0, broken.source().size()}, true);
      broken.set_root(broken.add_node("program", {{err, {}}}));
      broken.add_error(f.offset, f.message);
      return broken;
    }
  }
};

}  // namespace

std::unique_ptr<Grammar> make_javascript_grammar() {
  return std::make_unique<JavascriptGrammar>();
}

}  // namespace taskforge::syntax
