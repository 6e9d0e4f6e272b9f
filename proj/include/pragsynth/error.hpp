#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pragsynth {

enum class ErrorCode {
  SyntaxError,
  InvalidArgument,
  UnknownUtterance,
  InconsistentSpec,
  Exhausted,
  UnknownConcept,
  InvalidString,
  SignNotAllowed,
  DuplicateExample,
  NotFound,
  InvalidState,
  CorruptData,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownUtterance: return "UnknownUtterance";
    case ErrorCode::InconsistentSpec: return "InconsistentSpec";
    case ErrorCode::Exhausted: return "Exhausted";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::InvalidString: return "InvalidString";
    case ErrorCode::SignNotAllowed: return "SignNotAllowed";
    case ErrorCode::DuplicateExample: return "DuplicateExample";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::CorruptData: return "CorruptData";
  }
  return "Unknown";
}

// Every failure surfaced by the library carries one of the codes above; the
// HTTP layer maps the code name straight into its {code, message} body.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::SyntaxError,
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace pragsynth
