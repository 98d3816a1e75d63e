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

#include "taskforge/mutation/modifier.hpp"

namespace taskforge {

namespace {

constexpr std::array<std::string_view, kModifierCount> kNames = {
    "op_change",  "op_flip",      "operand_swap", "chain_break",  "const_mod",
    "branch_swap", "stmt_shuffle", "block_drop",  "wrapper_drop", "wrapper_unwrap",
    "base_drop",  "member_shuffle", "method_drop"};

}  // namespace

const std::array<ModifierId, kModifierCount>& all_modifiers() {
  static const std::array<ModifierId, kModifierCount> all = [] {
    std::array<ModifierId, kModifierCount> a{};
    for (std::size_t i = 0; i < kModifierCount; ++i) a[i] = static_cast<ModifierId>(i);
    return a;
  }();
  return all;
}

std::string_view to_string(ModifierId id) { return kNames.at(static_cast<std::size_t>(id)); }

std::optional<ModifierId> parse_modifier(std::string_view name) {
  for (std::size_t i = 0; i < kModifierCount; ++i) {
    if (kNames[i] == name) return static_cast<ModifierId>(i);
  }
  return std::nullopt;
}

bool is_class_modifier(ModifierId id) {
  return id == ModifierId::base_drop || id == ModifierId::member_shuffle ||
         id == ModifierId::method_drop;
}

}  // namespace taskforge
