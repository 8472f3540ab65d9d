#include "rlc/error.hpp"

namespace rlc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::MalformedTimestamp: return "MalformedTimestamp";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::NonNumericValue: return "NonNumericValue";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::MonthNotCovered: return "MonthNotCovered";
    case ErrorCode::MalformedWideRow: return "MalformedWideRow";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::AllZeroSpan: return "AllZeroSpan";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedModelFile: return "MalformedModelFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::NoComparablePositions: return "NoComparablePositions";
    case ErrorCode::AllWindowsMissing: return "AllWindowsMissing";
  }
  return "Unknown";
}

static std::string compose(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> where) {
  std::string out{to_string(code)};
  if (where) {
    out += "(" + std::to_string(*where) + ")";
  }
  if (!message.empty()) {
    out += ": " + message;
  }
  return out;
}

Error::Error(ErrorCode code, std::string message,
             std::optional<std::size_t> where)
    : std::runtime_error(compose(code, message, where)),
      code_(code),
      where_(where) {}

}  // namespace rlc
