#pragma once

#include <stdexcept>
#include <string>

namespace subfit {

/// Machine-parseable error classes; the CLI prints `class=<name>` on failure.
enum class ErrorClass {
  ParseError,
  IoError,
  NonManifold,
  MissingNormals,
  DegenerateInput,
  DegenerateTriangle,
  TargetUnreachable,
  PatchConditionViolated,
  DomainError,
  EmptyNeighborhood,
  AllSamplesEmpty,
  DimensionMismatch,
  Diverged,
  LevelTooLarge,
  InvalidArgument,
};

inline const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::ParseError: return "ParseError";
    case ErrorClass::IoError: return "IoError";
    case ErrorClass::NonManifold: return "NonManifold";
    case ErrorClass::MissingNormals: return "MissingNormals";
    case ErrorClass::DegenerateInput: return "DegenerateInput";
    case ErrorClass::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorClass::TargetUnreachable: return "TargetUnreachable";
    case ErrorClass::PatchConditionViolated: return "PatchConditionViolated";
    case ErrorClass::DomainError: return "DomainError";
    case ErrorClass::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorClass::AllSamplesEmpty: return "AllSamplesEmpty";
    case ErrorClass::DimensionMismatch: return "DimensionMismatch";
    case ErrorClass::Diverged: return "Diverged";
    case ErrorClass::LevelTooLarge: return "LevelTooLarge";
    case ErrorClass::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }
  const char* class_name() const { return error_class_name(cls_); }

 private:
  ErrorClass cls_;
};

}  // namespace subfit
