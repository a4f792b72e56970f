#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weakspot {

enum class ErrorCode {
  BadMagic,
  BadVersion,
  TruncatedPayload,
  NonFiniteValue,
  IoFailure,
  ParseError,
  LengthMismatch,
  DuplicateId,
  DuplicateLabel,
  DimMismatch,
  ZeroBase,
  InvalidArgument,
  UnknownClass,
  NoNeighbors,
  MissingPrediction,
  UnknownObjectId,
  MissingObjects,
  UnknownKey,
  EmptyLabel,
  MissingCaption,
  ProviderUnavailable,
  EmbedderUnavailable,
  EmptyClass,
  DivergedLoss,
  UnknownGroup,
  ZeroBaseline,
  InvalidSpec,
  InvalidConfig,
  BindFailure,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above; the
// message is "<Code>: <detail>" so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace weakspot
