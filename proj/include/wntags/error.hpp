#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wntags {

// Machine-readable failure kinds. Each one maps to a single HTTP status in
// the service layer and to exit code 1 in the CLI.
enum class ErrorCode {
  SyntaxError,
  DanglingEdge,
  AsymmetricEdge,
  DuplicateSynset,
  InvalidSynsetId,
  UnknownSynset,
  LemmaNotInSynset,
  StaleTable,
  IoError,
  FormatError,
  BuildFailure,
  DuplicateImage,
  EmotionOutOfRange,
  UnknownImage,
  WeightOutOfRange,
  InvalidAnnotator,
  InsufficientRaters,
  EmptyCorpus,
  EmptyQuery,
  NoSenseFound,
  InvalidRange,
  InvalidParams,
  NotEnoughCandidates,
  InvalidConfig,
  BadRequest,
  RouteNotFound,
  MethodNotAllowed,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace wntags
