#pragma once

#include <stdexcept>
#include <string>

namespace gkmm {

enum class ErrorKind {
  WeightSumError,
  DimensionMismatch,
  EmptyBlock,
  NonPositiveSigma,
  InfeasibleProblem,
  SingularSystem,
  DegenerateDesign,
  AllZeroWeights,
  ConfigError,
  IoError,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::WeightSumError: return "WeightSumError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyBlock: return "EmptyBlock";
    case ErrorKind::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorKind::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::AllZeroWeights: return "AllZeroWeights";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gkmm
