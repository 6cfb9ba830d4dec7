// Copyright 2026 The tierprof Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tierprof/error.h"

namespace tierprof {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kPortUnavailable: return "PortUnavailable";
    case ErrorCode::kEntitySpawnFailed: return "EntitySpawnFailed";
    case ErrorCode::kBootstrapTimeout: return "BootstrapTimeout";
    case ErrorCode::kSocketClosed: return "SocketClosed";
    case ErrorCode::kNoActiveWorkflow: return "NoActiveWorkflow";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kProcessNotFound: return "ProcessNotFound";
    case ErrorCode::kTargetTerminated: return "TargetTerminated";
    case ErrorCode::kMalformedStream: return "MalformedStream";
    case ErrorCode::kUnknownScope: return "UnknownScope";
    case ErrorCode::kRunIdMismatch: return "RunIdMismatch";
    case ErrorCode::kZeroElapsed: return "ZeroElapsed";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroRuntime: return "ZeroRuntime";
    case ErrorCode::kScenarioMismatch: return "ScenarioMismatch";
    case ErrorCode::kInvalidSortKey: return "InvalidSortKey";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace tierprof
