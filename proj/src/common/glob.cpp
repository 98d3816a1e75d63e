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

#include "taskforge/common/glob.hpp"

namespace taskforge {

namespace {

bool match_from(std::string_view pat, std::string_view str) {
  while (!pat.empty()) {
    if (pat.substr(0, 2) == "**") {
      std::string_view rest = pat.substr(2);
      bool slash = !rest.empty() && rest.front() == '/';
      if (slash && match_from(rest.substr(1), str)) return true;
      for (std::size_t i = 0; i <= str.size(); ++i) {
        if (match_from(rest, str.substr(i))) return true;
      }
      return false;
    }
    char c = pat.front();
    if (c == '*') {
      std::string_view rest = pat.substr(1);
      for (std::size_t i = 0; i <= str.size(); ++i) {
        if (match_from(rest, str.substr(i))) return true;
        if (i < str.size() && str[i] == '/') break;
      }
      return false;
    }
    if (str.empty()) return false;
    if (c == '?') {
      if (str.front() == '/') return false;
    } else if (c != str.front()) {
      return false;
    }
    pat.remove_prefix(1);
    str.remove_prefix(1);
  }
  return str.empty();
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view path) {
  return match_from(pattern, path);
}

}  // namespace taskforge
