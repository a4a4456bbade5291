#pragma once

#include <stdexcept>
#include <string>

namespace vlf {

enum class ErrorCode {
  InvariantViolation,
  UnknownRegion,
  Transport,
  PayloadTooLarge,
  UnsupportedKind,
  MissingScript,
  NoMasks,
  MissingDictionaryEntry,
  NoTemplateFor,
  InsufficientSources,
  MissingSources,
  EmptySet,
  EmptyCorpus,
  EmptyRanking,
  MalformedResponse,
  TemplateSlotMissing,
  DescriptionRejected,
  ParseFailure,
  RecordMismatch,
  EmptyBank,
  KeyMismatch,
  MissingCell,
  ConfigError,
  MissingInput,
  IoFailure,
  InvalidArgument,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::UnknownRegion: return "UnknownRegion";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::MissingScript: return "MissingScript";
    case ErrorCode::NoMasks: return "NoMasks";
    case ErrorCode::MissingDictionaryEntry: return "MissingDictionaryEntry";
    case ErrorCode::NoTemplateFor: return "NoTemplateFor";
    case ErrorCode::InsufficientSources: return "InsufficientSources";
    case ErrorCode::MissingSources: return "MissingSources";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyRanking: return "EmptyRanking";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::TemplateSlotMissing: return "TemplateSlotMissing";
    case ErrorCode::DescriptionRejected: return "DescriptionRejected";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::RecordMismatch: return "RecordMismatch";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

/// Single exception type for the whole library; `code()` carries the
/// machine-readable cause so callers can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vlf
