#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttrf {

enum class ErrorCode {
  DegenerateTetra,
  TooFewPoints,
  DegenerateInput,
  ParseError,
  UnsupportedProperty,
  OutOfSegment,
  EmptyTrace,
  NonFiniteActivation,
  NonFiniteGradient,
  SizeMismatch,
  MissingImage,
  OutOfBounds,
  DimMismatch,
  OutOfBox,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateTetra: return "DegenerateTetra";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedProperty: return "UnsupportedProperty";
    case ErrorCode::OutOfSegment: return "OutOfSegment";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ttrf
