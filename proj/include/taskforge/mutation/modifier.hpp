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

#include <array>
#include <optional>
#include <string_view>

namespace taskforge {

// The procedural fault taxonomy. Enum order is the canonical enumeration
// order for candidate grids; serialized names are the snake_case strings.
enum class ModifierId {
  op_change,
  op_flip,
  operand_swap,
  chain_break,
  const_mod,
  branch_swap,
  stmt_shuffle,
  block_drop,
  wrapper_drop,
  wrapper_unwrap,
  base_drop,
  member_shuffle,
  method_drop,
};

inline constexpr std::size_t kModifierCount = 13;

const std::array<ModifierId, kModifierCount>& all_modifiers();
std::string_view to_string(ModifierId id);
std::optional<ModifierId> parse_modifier(std::string_view name);

// Modifiers whose target lives in a class (the class owns the candidate);
// the rest act inside function and method bodies.
bool is_class_modifier(ModifierId id);

// stmt_shuffle may legitimately produce code that no longer parses in
// grammars where statement order matters syntactically.
inline bool parse_guaranteed(ModifierId id) { return id != ModifierId::stmt_shuffle; }

}  // namespace taskforge
