#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wbis {

enum class ErrorCode {
  DomainError,
  NoRoot,
  NonPositiveDrift,
  ZeroSpineWeight,
  NoTiltAvailable,
  MissingIngredients,
  NonBoundedModel,
  SumBoundViolated,
  BudgetExceeded,
  RecursionBudget,
  NotDegenerateQ,
  EmptySample,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // NoRoot, NonPositiveDrift and ZeroSpineWeight: the model violates the
  // tail-asymptotic assumptions rather than the caller misusing the API.
  bool is_model_math_failure() const noexcept {
    return code_ == ErrorCode::NoRoot || code_ == ErrorCode::NonPositiveDrift ||
           code_ == ErrorCode::ZeroSpineWeight;
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NonPositiveDrift: return "NonPositiveDrift";
    case ErrorCode::ZeroSpineWeight: return "ZeroSpineWeight";
    case ErrorCode::NoTiltAvailable: return "NoTiltAvailable";
    case ErrorCode::MissingIngredients: return "MissingIngredients";
    case ErrorCode::NonBoundedModel: return "NonBoundedModel";
    case ErrorCode::SumBoundViolated: return "SumBoundViolated";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::RecursionBudget: return "RecursionBudget";
    case ErrorCode::NotDegenerateQ: return "NotDegenerateQ";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace wbis
