#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bfreq {

enum class ErrorCode {
  DivergentMass,
  BoundaryRegion,
  DegenerateInput,
  InvalidTruncation,
  InvalidMeasure,
  InvalidParams,
  RegimeMismatch,
  InvalidConfig,
  InvalidPath,
  BeyondHorizon,
  InvalidState,
  NotClosed,
  EmptyInput,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DivergentMass: return "DivergentMass";
    case ErrorCode::BoundaryRegion: return "BoundaryRegion";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidTruncation: return "InvalidTruncation";
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::BeyondHorizon: return "BeyondHorizon";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace bfreq
