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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taskforge/syntax/tree.hpp"

namespace taskforge::syntax {

// A parser plus its closed vocabulary of node types and field names. Queries
// are compiled against the vocabulary, which is what makes a query "valid for
// a grammar". Grammars are immutable and safe to share across threads.
class Grammar {
 public:
  virtual ~Grammar() = default;

  const std::string& name() const { return name_; }
  const std::string& version() const { return version_; }
  // Pinned reference, "<name>@<version>"; templates name grammars by this.
  std::string ref() const { return name_ + "@" + version_; }

  virtual SyntaxTree parse(std::string source) const = 0;

  bool has_named_type(std::string_view type) const;
  bool has_anonymous_type(std::string_view type) const;
  bool has_field(std::string_view field) const;

  // Interned views; throw std::logic_error on unknown strings, since the
  // parsers only ever emit vocabulary they declared.
  std::string_view named_type(std::string_view type) const;
  std::string_view anonymous_type(std::string_view type) const;
  std::string_view field(std::string_view field) const;

 protected:
  Grammar(std::string name, std::string version, const std::vector<std::string>& named,
          const std::vector<std::string>& anonymous, const std::vector<std::string>& fields);

 private:
  std::string name_;
  std::string version_;
  std::set<std::string, std::less<>> named_;
  std::set<std::string, std::less<>> anonymous_;
  std::set<std::string, std::less<>> fields_;
};

class GrammarRegistry {
 public:
  // Registry holding every grammar compiled into this build.
  static const GrammarRegistry& builtin();

  void add(std::unique_ptr<Grammar> grammar);
  const Grammar* find(std::string_view ref) const;
  // Throws GrammarUnavailable.
  const Grammar& require(std::string_view ref) const;
  std::vector<std::string> refs() const;

 private:
  std::vector<std::unique_ptr<Grammar>> grammars_;
};

std::unique_ptr<Grammar> make_python_grammar();
std::unique_ptr<Grammar> make_javascript_grammar();

}  // namespace taskforge::syntax
