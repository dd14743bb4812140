#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stirap {

enum class ErrorKind {
  PoleProximity,
  DegenerateAngle,
  WindowTooNarrow,
  NonHermitianInput,
  StepUnderflow,
  NotNormalized,
  DetuningTooSmall,
  NoConvergence,
  BoxContainsPole,
  ContourBlocked,
  HigherOrderZero,
  RealAxisZero,
  NoBreakdownDetected,
  InvalidArgument,
  ParseError,
  ValidationError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PoleProximity: return "PoleProximity";
    case ErrorKind::DegenerateAngle: return "DegenerateAngle";
    case ErrorKind::WindowTooNarrow: return "WindowTooNarrow";
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::DetuningTooSmall: return "DetuningTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BoxContainsPole: return "BoxContainsPole";
    case ErrorKind::ContourBlocked: return "ContourBlocked";
    case ErrorKind::HigherOrderZero: return "HigherOrderZero";
    case ErrorKind::RealAxisZero: return "RealAxisZero";
    case ErrorKind::NoBreakdownDetected: return "NoBreakdownDetected";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stirap
