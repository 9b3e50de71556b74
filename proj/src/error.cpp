#include "agtb/error.hpp"

namespace agtb {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::XmlSyntax: return "XmlSyntax";
    case ErrorKind::DuplicateTokenId: return "DuplicateTokenId";
    case ErrorKind::EmptySentence: return "EmptySentence";
    case ErrorKind::ColumnCount: return "ColumnCount";
    case ErrorKind::NonContiguousIds: return "NonContiguousIds";
    case ErrorKind::BlankLineProtocol: return "BlankLineProtocol";
    case ErrorKind::FieldSyntax: return "FieldSyntax";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::RowLength: return "RowLength";
    case ErrorKind::NonNumeric: return "NonNumeric";
    case ErrorKind::DateSyntax: return "DateSyntax";
    case ErrorKind::RangeOrder: return "RangeOrder";
    case ErrorKind::MalformedTag: return "MalformedTag";
    case ErrorKind::TooFewSentences: return "TooFewSentences";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::DuplicateSentenceId: return "DuplicateSentenceId";
    case ErrorKind::TokenizationMismatch: return "TokenizationMismatch";
    case ErrorKind::InvalidSystemTree: return "InvalidSystemTree";
    case ErrorKind::TooFewScores: return "TooFewScores";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateRope: return "DegenerateRope";
    case ErrorKind::DegeneratePosterior: return "DegeneratePosterior";
    case ErrorKind::TooFewModels: return "TooFewModels";
    case ErrorKind::TemplateHeadOutOfRange: return "TemplateHeadOutOfRange";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace agtb
