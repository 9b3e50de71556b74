#pragma once

#include <stdexcept>
#include <string>

namespace agtb {

enum class ErrorKind {
  // ingest
  XmlSyntax,
  DuplicateTokenId,
  EmptySentence,
  ColumnCount,
  NonContiguousIds,
  BlankLineProtocol,
  FieldSyntax,
  Unsupported,
  HeaderMismatch,
  RowLength,
  NonNumeric,
  DateSyntax,
  RangeOrder,
  MalformedTag,
  // splits
  TooFewSentences,
  IdMismatch,
  DuplicateSentenceId,
  // evaluation
  TokenizationMismatch,
  InvalidSystemTree,
  TooFewScores,
  // decoding
  SizeLimit,
  Infeasible,
  // model comparison
  LengthMismatch,
  DegenerateRope,
  DegeneratePosterior,
  TooFewModels,
  // normalization
  TemplateHeadOutOfRange,
  InvalidConfig,
  // mini model
  NonFiniteLoss,
  // misc
  Io,
  InvalidArgument,
};

const char* to_string(ErrorKind kind) noexcept;

/// Library-wide exception; `kind()` identifies the contract violation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace agtb
