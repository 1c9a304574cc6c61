// Copyright 2026 The CoDi Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace codi {

enum class ErrorCode {
  InvalidArgument,
  TagCollision,
  MalformedTag,
  UnbalancedTurn,
  TrailingGarbage,
  InvalidGraph,
  MissingContext,
  MissingSeed,
  UnresolvedPlaceholder,
  UnknownPhenomenon,
  Timeout,
  ServerError,
  RateLimited,
  MalformedResponse,
  ScriptExhausted,
  MarkerMissing,
  EmptyExtraction,
  DuplicateTurn,
  SchemaError,
  ConfigError,
  IoError,
  BudgetExhausted,
  EmptyInput,
};

const char* to_string(ErrorCode code);

/// Base class for all errors raised by the library. Carries a stable code so
/// callers (and the C API) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TagCollision: return "TagCollision";
    case ErrorCode::MalformedTag: return "MalformedTag";
    case ErrorCode::UnbalancedTurn: return "UnbalancedTurn";
    case ErrorCode::TrailingGarbage: return "TrailingGarbage";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::MissingSeed: return "MissingSeed";
    case ErrorCode::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
    case ErrorCode::UnknownPhenomenon: return "UnknownPhenomenon";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ServerError: return "ServerError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::MarkerMissing: return "MarkerMissing";
    case ErrorCode::EmptyExtraction: return "EmptyExtraction";
    case ErrorCode::DuplicateTurn: return "DuplicateTurn";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "UnknownError";
}

}  // namespace codi
