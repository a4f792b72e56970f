#include "weakspot/error.hpp"

namespace weakspot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroBase: return "ZeroBase";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::NoNeighbors: return "NoNeighbors";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::UnknownObjectId: return "UnknownObjectId";
    case ErrorCode::MissingObjects: return "MissingObjects";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::EmptyLabel: return "EmptyLabel";
    case ErrorCode::MissingCaption: return "MissingCaption";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::EmbedderUnavailable: return "EmbedderUnavailable";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BindFailure: return "BindFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace weakspot
