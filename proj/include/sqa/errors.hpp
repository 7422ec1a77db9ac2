#ifndef SQA_ERRORS_HPP
#define SQA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sqa {

enum class ErrorCode {
  MalformedInput,
  OffsetOutOfRange,
  MissingTranscript,
  EmptyReference,
  EmptyLexicon,
  Unreachable,
  EmptyWord,
  EmptyReferences,
  DegenerateInterval,
  AnswerUnalignable,
  IndexOutOfRange,
  UnknownPhonemeId,
  NoForwardState,
  EmptyDocument,
  InvalidSpan,
  EmptyRecords,
  VocabularyMismatch,
  IoError,
  InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::MissingTranscript: return "MissingTranscript";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyLexicon: return "EmptyLexicon";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::EmptyWord: return "EmptyWord";
    case ErrorCode::EmptyReferences: return "EmptyReferences";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::AnswerUnalignable: return "AnswerUnalignable";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnknownPhonemeId: return "UnknownPhonemeId";
    case ErrorCode::NoForwardState: return "NoForwardState";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sqa

#endif  // SQA_ERRORS_HPP
