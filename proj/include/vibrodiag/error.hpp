#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vibrodiag {

enum class ErrorCode {
  MissingConditionDir,
  EmptyConditionDir,
  MalformedCsv,
  TooShort,
  NonFiniteInput,
  EmptyMatrix,
  AllRowsDropped,
  SingleClass,
  KTooLarge,
  DimensionMismatch,
  WrongModelKind,
  InvalidSpec,
  TooFewRows,
  ClassBelowFoldCount,
  EmptyGrid,
  InvalidConfig,
  MalformedModel,
  Io,
};

constexpr std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingConditionDir: return "MissingConditionDir";
    case ErrorCode::EmptyConditionDir: return "EmptyConditionDir";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::AllRowsDropped: return "AllRowsDropped";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::WrongModelKind: return "WrongModelKind";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ClassBelowFoldCount: return "ClassBelowFoldCount";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every module reports failures through this exception; `code()` carries the
/// error kind and `what()` a human-readable detail line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vibrodiag
