// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moela {

enum class ErrorCode {
  InvalidInstance,
  InstanceInfeasible,
  ShapeMismatch,
  NoFeasibleMove,
  Disconnected,
  EmptyLinks,
  NoCpuOrLlc,
  IndexOutOfRange,
  MissingComponent,
  BadDims,
  DimMismatch,
  PointBeyondRef,
  NeverReached,
  EmptyPopulation,
  InsufficientData,
  BadNLocal,
  BadConfig,
  BadRecipe,
  MixedInstances,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::InstanceInfeasible: return "InstanceInfeasible";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoFeasibleMove: return "NoFeasibleMove";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::EmptyLinks: return "EmptyLinks";
    case ErrorCode::NoCpuOrLlc: return "NoCpuOrLlc";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingComponent: return "MissingComponent";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::PointBeyondRef: return "PointBeyondRef";
    case ErrorCode::NeverReached: return "NeverReached";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::BadNLocal: return "BadNLocal";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadRecipe: return "BadRecipe";
    case ErrorCode::MixedInstances: return "MixedInstances";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace moela
