#ifndef QMOMENT_ERROR_HPP
#define QMOMENT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmoment {

enum class ErrorCode {
  CutoffTooSmall,
  InvalidParameter,
  OrderingMismatch,
  OutOfDomain,
  GridTooCoarse,
  DegenerateDirection,
  InsufficientDegree,
  GainTooSmall,
  SingularSystem,
  MissingAngles,
  PurityNotConverged,
  InvalidGamma,
  DimensionMismatch,
  TooFewSamples,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::OrderingMismatch: return "OrderingMismatch";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::InsufficientDegree: return "InsufficientDegree";
    case ErrorCode::GainTooSmall: return "GainTooSmall";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MissingAngles: return "MissingAngles";
    case ErrorCode::PurityNotConverged: return "PurityNotConverged";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Validated failure of a library operation. `context` carries the
/// diagnostic detail (achieved norm, condition number, offending index...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string context)
      : std::runtime_error(std::string(to_string(code)) + ": " + context),
        code_(code),
        context_(std::move(context)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

}  // namespace qmoment

#endif  // QMOMENT_ERROR_HPP
