#include "wntags/error.hpp"

namespace wntags {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::AsymmetricEdge: return "AsymmetricEdge";
    case ErrorCode::DuplicateSynset: return "DuplicateSynset";
    case ErrorCode::InvalidSynsetId: return "InvalidSynsetId";
    case ErrorCode::UnknownSynset: return "UnknownSynset";
    case ErrorCode::LemmaNotInSynset: return "LemmaNotInSynset";
    case ErrorCode::StaleTable: return "StaleTable";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::BuildFailure: return "BuildFailure";
    case ErrorCode::DuplicateImage: return "DuplicateImage";
    case ErrorCode::EmotionOutOfRange: return "EmotionOutOfRange";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::InvalidAnnotator: return "InvalidAnnotator";
    case ErrorCode::InsufficientRaters: return "InsufficientRaters";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::NoSenseFound: return "NoSenseFound";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotEnoughCandidates: return "NotEnoughCandidates";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::RouteNotFound: return "RouteNotFound";
    case ErrorCode::MethodNotAllowed: return "MethodNotAllowed";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace wntags
