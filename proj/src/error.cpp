#include "editeval/error.hpp"

namespace editeval {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMissingCaption: return "MissingCaption";
    case ErrorCode::kBadRatios: return "BadRatios";
    case ErrorCode::kEmptyReferences: return "EmptyReferences";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kBackend: return "BackendError";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kExternalScorerUnavailable: return "ExternalScorerUnavailable";
    case ErrorCode::kMissingTargets: return "MissingTargets";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMalformedVote: return "MalformedVote";
    case ErrorCode::kInvalidItem: return "InvalidItem";
    case ErrorCode::kInvalidTemplate: return "InvalidTemplate";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace editeval
