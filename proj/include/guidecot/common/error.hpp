// Copyright 2026 The GuideCoT Authors
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
#include <string_view>

namespace guidecot {

enum class ErrorCode {
  parse,
  duplicate_annotation,
  empty_dataset,
  degenerate_point,
  configuration,
  generation,
  degenerate_heading,
  dimension,
  parameter,
  degenerate_distribution,
  out_of_bounds,
  load,
  architecture,
  non_finite_loss,
  tokenization,
  decode_failure,
  reference,
  input,
  validation,
  io,
  unavailable,
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::duplicate_annotation: return "duplicate_annotation";
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::degenerate_point: return "degenerate_point";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::generation: return "generation";
    case ErrorCode::degenerate_heading: return "degenerate_heading";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::degenerate_distribution: return "degenerate_distribution";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::load: return "load";
    case ErrorCode::architecture: return "architecture";
    case ErrorCode::non_finite_loss: return "non_finite_loss";
    case ErrorCode::tokenization: return "tokenization";
    case ErrorCode::decode_failure: return "decode_failure";
    case ErrorCode::reference: return "reference";
    case ErrorCode::input: return "input";
    case ErrorCode::validation: return "validation";
    case ErrorCode::io: return "io";
    case ErrorCode::unavailable: return "unavailable";
  }
  return "unknown";
}

/// Exception carrying a machine-readable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Decode failure that keeps the raw generated text for diagnostics.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& message, std::string raw_text)
      : Error(ErrorCode::decode_failure, message), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace guidecot
