#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dare {

/// Failure categories surfaced by the library. The CLI maps all of them to
/// exit code 3; the name is always the first token of the message.
enum class ErrorCode {
  ShapeMismatch,
  InvalidGeometry,
  WeightMismatch,
  IoError,
  CorruptFile,
  InvalidConfig,
  CycleDetected,
  InvalidTopology,
  DuplicateLeaf,
  UncoveredLabel,
  UnknownLabel,
  ArityMismatch,
  GroupMismatch,
  DegenerateNode,
  LengthMismatch,
  LabelOutOfRange,
  EmptyMatrix,
  EmptyList,
  InvalidK,
  ParseError,
  CountMismatch,
  UnsupportedFormat,
  CorruptHeader,
  TruncatedPayload,
  ContractViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace dare
