#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iqm {

enum class ErrorCode {
  // core
  DuplicateLabelConflict,
  UnknownChild,
  UnknownGeneration,
  ZeroWeightVector,
  InvalidGeneration,
  UnresolvableConditions,
  BackendUnavailable,
  DegenerateSuperposition,
  TestModeRequired,
  // backend
  DimensionMismatch,
  NotHermitian,
  // grids
  DuplicateGridName,
  NonDistinctCodes,
  IncompleteBins,
  SpectrumMismatch,
  UnknownBase,
  UnknownGrid,
  UnknownChannel,
  InvalidChannel,
  ExemplarConsumed,
  SystemCountMismatch,
  IncompatibleGrids,
  DuplicateSubsystem,
  NonPositiveFlightTime,
  NonPositiveMass,
  // stats
  EmptyTable,
  InvalidTrialCount,
  // probtree
  EventOutsideUniverse,
  UndefinedJointProbability,
  SameBranch,
  NotComposedOf,
  InvalidWeights,
  InvalidDurations,
  // experiments
  UnknownScenario,
  SchemaViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace iqm
