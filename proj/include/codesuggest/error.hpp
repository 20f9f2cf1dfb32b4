#pragma once

#include <stdexcept>
#include <string>

namespace codesuggest {

enum class ErrorCode {
  UnterminatedString,
  InconsistentIndentation,
  InvalidCharacter,
  UnbalancedIndent,
  EmptyCorpus,
  TooFewProjects,
  ShapeMismatch,
  DivergedLoss,
  VocabMismatch,
  BadConfig,
  BadFormat,
  Io,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace codesuggest
