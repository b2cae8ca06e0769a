#include "dare/error.hpp"

namespace dare {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::WeightMismatch: return "WeightMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::InvalidTopology: return "InvalidTopology";
    case ErrorCode::DuplicateLeaf: return "DuplicateLeaf";
    case ErrorCode::UncoveredLabel: return "UncoveredLabel";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::GroupMismatch: return "GroupMismatch";
    case ErrorCode::DegenerateNode: return "DegenerateNode";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::ContractViolation: return "ContractViolation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace dare
