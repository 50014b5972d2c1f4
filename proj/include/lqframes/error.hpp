#pragma once

#include <stdexcept>
#include <string>

namespace lqframes {

enum class ErrorKind {
  NotAFrame,
  IllConditioned,
  InvalidDimensions,
  InvalidParameters,
  GenerationFailed,
  DegenerateDictionary,
  ConditionUnevaluable,
  EmptyKernel,
  InfeasibleOrDegenerate,
  InvalidSpec,
  ParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotAFrame: return "NotAFrame";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::InvalidDimensions: return "InvalidDimensions";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::DegenerateDictionary: return "DegenerateDictionary";
    case ErrorKind::ConditionUnevaluable: return "ConditionUnevaluable";
    case ErrorKind::EmptyKernel: return "EmptyKernel";
    case ErrorKind::InfeasibleOrDegenerate: return "InfeasibleOrDegenerate";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lqframes
