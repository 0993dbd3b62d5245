#include "dumbo/error.hpp"

namespace dumbo {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UncoveredDimension: return "UncoveredDimension";
    case ErrorCode::EmptyFactor: return "EmptyFactor";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateFactor: return "DuplicateFactor";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingFactorOutputs: return "MissingFactorOutputs";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NegativeLipschitz: return "NegativeLipschitz";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::IncompatibleVariant: return "IncompatibleVariant";
    case ErrorCode::ObjectiveFailure: return "ObjectiveFailure";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dumbo
