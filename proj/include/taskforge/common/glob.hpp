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

#include <string_view>

namespace taskforge {

// Path glob over '/'-separated relative paths.
//   *   any run of characters except '/'
//   **  any run of characters including '/'; "**/" also matches nothing
//   ?   one character except '/'
bool glob_match(std::string_view pattern, std::string_view path);

}  // namespace taskforge
