#pragma once

#include <stdexcept>
#include <string>

namespace fedbuf {

// Coarse failure class; the CLI prints it as a machine-readable prefix.
enum class ErrorCategory { Parse, Config, Io, Shape, Training, Usage };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Shape: return "shape";
    case ErrorCategory::Training: return "training";
    case ErrorCategory::Usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace fedbuf
