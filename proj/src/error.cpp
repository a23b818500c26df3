#include "iqm/error.hpp"

namespace iqm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateLabelConflict:
      return "DuplicateLabelConflict";
    case ErrorCode::UnknownChild:
      return "UnknownChild";
    case ErrorCode::UnknownGeneration:
      return "UnknownGeneration";
    case ErrorCode::ZeroWeightVector:
      return "ZeroWeightVector";
    case ErrorCode::InvalidGeneration:
      return "InvalidGeneration";
    case ErrorCode::UnresolvableConditions:
      return "UnresolvableConditions";
    case ErrorCode::BackendUnavailable:
      return "BackendUnavailable";
    case ErrorCode::DegenerateSuperposition:
      return "DegenerateSuperposition";
    case ErrorCode::TestModeRequired:
      return "TestModeRequired";
    case ErrorCode::DimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::NotHermitian:
      return "NotHermitian";
    case ErrorCode::DuplicateGridName:
      return "DuplicateGridName";
    case ErrorCode::NonDistinctCodes:
      return "NonDistinctCodes";
    case ErrorCode::IncompleteBins:
      return "IncompleteBins";
    case ErrorCode::SpectrumMismatch:
      return "SpectrumMismatch";
    case ErrorCode::UnknownBase:
      return "UnknownBase";
    case ErrorCode::UnknownGrid:
      return "UnknownGrid";
    case ErrorCode::UnknownChannel:
      return "UnknownChannel";
    case ErrorCode::InvalidChannel:
      return "InvalidChannel";
    case ErrorCode::ExemplarConsumed:
      return "ExemplarConsumed";
    case ErrorCode::SystemCountMismatch:
      return "SystemCountMismatch";
    case ErrorCode::IncompatibleGrids:
      return "IncompatibleGrids";
    case ErrorCode::DuplicateSubsystem:
      return "DuplicateSubsystem";
    case ErrorCode::NonPositiveFlightTime:
      return "NonPositiveFlightTime";
    case ErrorCode::NonPositiveMass:
      return "NonPositiveMass";
    case ErrorCode::EmptyTable:
      return "EmptyTable";
    case ErrorCode::InvalidTrialCount:
      return "InvalidTrialCount";
    case ErrorCode::EventOutsideUniverse:
      return "EventOutsideUniverse";
    case ErrorCode::UndefinedJointProbability:
      return "UndefinedJointProbability";
    case ErrorCode::SameBranch:
      return "SameBranch";
    case ErrorCode::NotComposedOf:
      return "NotComposedOf";
    case ErrorCode::InvalidWeights:
      return "InvalidWeights";
    case ErrorCode::InvalidDurations:
      return "InvalidDurations";
    case ErrorCode::UnknownScenario:
      return "UnknownScenario";
    case ErrorCode::SchemaViolation:
      return "SchemaViolation";
  }
  return "Unknown";
}

}  // namespace iqm
