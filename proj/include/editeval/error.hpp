#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace editeval {

enum class ErrorCode {
  kParse,
  kSchema,
  kDuplicateId,
  kMissingCaption,
  kBadRatios,
  kEmptyReferences,
  kEmptyCorpus,
  kNonFiniteInput,
  kInvalidWeights,
  kLengthMismatch,
  kDegenerateVariance,
  kUnknownColumn,
  kBackend,
  kMalformedResponse,
  kExternalScorerUnavailable,
  kMissingTargets,
  kEmptyInput,
  kMalformedVote,
  kInvalidItem,
  kInvalidTemplate,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// Base exception for everything the engine reports. The code is stable and
// is what callers (and the CLI exit-code mapping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BackendError : public Error {
 public:
  BackendError(int status, int attempts, const std::string& message)
      : Error(ErrorCode::kBackend, message), status_(status), attempts_(attempts) {}

  // HTTP status of the last attempt, 0 for transport failures.
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  int status_;
  int attempts_;
};

}  // namespace editeval
