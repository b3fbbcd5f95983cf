#pragma once

#include <stdexcept>
#include <string>

namespace saecon {

// Machine-readable error categories. The CLI prints "<code>: <message>" on
// a single line and exits nonzero.
enum class ErrorCode {
  Io,
  Parse,
  Validation,
  Config,
  Numeric,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Validation: return "E_VALIDATION";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Numeric: return "E_NUMERIC";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  std::string one_line() const {
    return std::string(error_code_name(code_)) + ": " + what();
  }

 private:
  ErrorCode code_;
};

}  // namespace saecon
