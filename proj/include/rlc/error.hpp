#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rlc {

enum class ErrorCode {
  // ingest
  EmptyInput,
  MissingHeader,
  MalformedTimestamp,
  NonMonotonicTimestamp,
  NonNumericValue,
  NegativeValue,
  MonthNotCovered,
  MalformedWideRow,
  // features
  DegenerateSpan,
  AllZeroSpan,
  SeriesTooShort,
  TooFewRows,
  // anfis
  DegenerateRange,
  EmptyBatch,
  ArityMismatch,
  InvalidConfig,
  MalformedModelFile,
  VersionMismatch,
  // curves
  NoComparablePositions,
  AllWindowsMissing,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `where` carries the offending row
/// number (ingest, 1-based file line) or sample index (features) when one
/// applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> where = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> where_;
};

}  // namespace rlc
