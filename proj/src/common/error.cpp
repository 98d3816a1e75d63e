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

#include "taskforge/common/error.hpp"

namespace taskforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::MalformedQuery: return "MalformedQuery";
    case ErrorCode::DuplicateModifierRule: return "DuplicateModifierRule";
    case ErrorCode::UnknownModifier: return "UnknownModifier";
    case ErrorCode::GrammarUnavailable: return "GrammarUnavailable";
    case ErrorCode::AmbiguousExtension: return "AmbiguousExtension";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SnapshotMismatch: return "SnapshotMismatch";
    case ErrorCode::TargetVanished: return "TargetVanished";
    case ErrorCode::NoVariantAvailable: return "NoVariantAvailable";
    case ErrorCode::OverlappingEdits: return "OverlappingEdits";
    case ErrorCode::SpanOutOfBounds: return "SpanOutOfBounds";
    case ErrorCode::InvalidEditSet: return "InvalidEditSet";
    case ErrorCode::NoChanges: return "NoChanges";
    case ErrorCode::BinaryFile: return "BinaryFile";
    case ErrorCode::MalformedPatch: return "MalformedPatch";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::HunkRejected: return "HunkRejected";
    case ErrorCode::PostStateMismatch: return "PostStateMismatch";
    case ErrorCode::AnalysisFailed: return "AnalysisFailed";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::PoolShutDown: return "PoolShutDown";
    case ErrorCode::SnapshotUnavailable: return "SnapshotUnavailable";
    case ErrorCode::SpawnFailed: return "SpawnFailed";
    case ErrorCode::SandboxRevoked: return "SandboxRevoked";
    case ErrorCode::MalformedArtifact: return "MalformedArtifact";
    case ErrorCode::DuplicateTestId: return "DuplicateTestId";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingEntityId: return "DanglingEntityId";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& subject,
                           const std::string& detail) {
  std::string msg(to_string(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string subject, std::string detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)),
      detail_(std::move(detail)) {}

}  // namespace taskforge
