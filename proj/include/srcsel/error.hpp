#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srcsel {

enum class ErrorCode {
  MalformedCsv,
  BadLabel,
  MissingColumn,
  MissingValueRejected,
  BadConfig,
  TooFewExamples,
  NotEnoughRows,
  SchemaMismatch,
  InvalidScenario,
  EmptyMatrix,
  SingleClassUnregularized,
  NonFinite,
  DimensionMismatch,
  EmptySource,
  GroupVocabularyMismatch,
  DegenerateCovariance,
  AbsoluteContinuityViolation,
  PlanExceedsData,
  SingleClass,
  NoEligibleGroups,
  DegenerateVariance,
  EmptyResults,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Contract or data error raised by every module. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace srcsel
