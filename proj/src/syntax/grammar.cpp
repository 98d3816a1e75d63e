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

#include "taskforge/syntax/grammar.hpp"

#include <stdexcept>

#include "taskforge/common/error.hpp"

namespace taskforge::syntax {

Grammar::Grammar(std::string name, std::string version, const std::vector<std::string>& named,
                 const std::vector<std::string>& anonymous,
                 const std::vector<std::string>& fields)
    : name_(std::move(name)),
      version_(std::move(version)),
      named_(named.begin(), named.end()),
      anonymous_(anonymous.begin(), anonymous.end()),
      fields_(fields.begin(), fields.end()) {
  named_.insert("ERROR");
}

bool Grammar::has_named_type(std::string_view type) const { return named_.contains(type); }
bool Grammar::has_anonymous_type(std::string_view type) const {
  return anonymous_.contains(type);
}
bool Grammar::has_field(std::string_view field) const { return fields_.contains(field); }

namespace {

std::string_view intern(const std::set<std::string, std::less<>>& set, std::string_view s,
                        const char* what) {
  auto it = set.find(s);
  if (it == set.end()) {
    throw std::logic_error(std::string("grammar emitted undeclared ") + what + ": " +
                           std::string(s));
  }
  return *it;
}

}  // namespace

std::string_view Grammar::named_type(std::string_view type) const {
  return intern(named_, type, "node type");
}
std::string_view Grammar::anonymous_type(std::string_view type) const {
  return intern(anonymous_, type, "token");
}
std::string_view Grammar::field(std::string_view field) const {
  return intern(fields_, field, "field");
}

const GrammarRegistry& GrammarRegistry::builtin() {
  static const GrammarRegistry registry = [] {
    GrammarRegistry r;
    r.add(make_python_grammar());
    r.add(make_javascript_grammar());
    return r;
  }();
  return registry;
}

void GrammarRegistry::add(std::unique_ptr<Grammar> grammar) {
  grammars_.push_back(std::move(grammar));
}

const Grammar* GrammarRegistry::find(std::string_view ref) const {
  for (const auto& g : grammars_) {
    if (g->ref() == ref) return g.get();
  }
  return nullptr;
}

const Grammar& GrammarRegistry::require(std::string_view ref) const {
  if (const Grammar* g = find(ref)) return *g;
  throw Error(ErrorCode::GrammarUnavailable, std::string(ref));
}

std::vector<std::string> GrammarRegistry::refs() const {
  std::vector<std::string> out;
  for (const auto& g : grammars_) out.push_back(g->ref());
  return out;
}

}  // namespace taskforge::syntax
