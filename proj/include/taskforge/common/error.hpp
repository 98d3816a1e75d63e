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

#include <stdexcept>
#include <string>
#include <string_view>

namespace taskforge {

enum class ErrorCode {
  // templates
  MissingKey,
  MalformedQuery,
  DuplicateModifierRule,
  UnknownModifier,
  GrammarUnavailable,
  AmbiguousExtension,
  // analysis
  IoError,
  // mutation
  SnapshotMismatch,
  TargetVanished,
  NoVariantAvailable,
  OverlappingEdits,
  SpanOutOfBounds,
  InvalidEditSet,
  // patches
  NoChanges,
  BinaryFile,
  MalformedPatch,
  BaseMismatch,
  HunkRejected,
  PostStateMismatch,
  AnalysisFailed,
  // sandbox
  PoolExhausted,
  PoolShutDown,
  SnapshotUnavailable,
  SpawnFailed,
  SandboxRevoked,
  // verification
  MalformedArtifact,
  DuplicateTestId,
  NotReady,
  // packaging / hollowing
  SchemaViolation,
  DanglingEntityId,
  MissingTemplate,
  // pipeline
  MissingPrerequisite,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
// `subject` names the offending key, path, test id, etc.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, std::string detail = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string subject_;
  std::string detail_;
};

}  // namespace taskforge
