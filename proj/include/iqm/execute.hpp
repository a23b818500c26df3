#pragma once

// Plan elaboration (declarations turned into live objects) and execution.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iqm/core.hpp"
#include "iqm/error.hpp"
#include "iqm/grids.hpp"
#include "iqm/plan.hpp"
#include "iqm/stats.hpp"

namespace iqm {

/// A library error raised while elaborating the declaration at `pointer`.
class ElaborationError : public Error {
 public:
  ElaborationError(const Error& cause, std::string pointer) : Error(cause), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct Elaboration {
  std::unique_ptr<Laboratory> lab;
  GridCatalog catalog;
  std::map<std::string, std::shared_ptr<const ObservableSpec>> observables;
  std::map<std::string, ExternalConditions> conditions;
  std::map<std::string, MeasurementChannel> channels;

  std::vector<MeasurementChannel> channel_list(const Json& ids) const;
};

/// Registers every declaration in order; ElaborationError on the first failure.
Elaboration elaborate(const ExperimentPlan& plan);

enum ExitCode : int { kExitPass = 0, kExitValidation = 1, kExitParse = 2, kExitRuntime = 3 };

struct ExecutionResult {
  Json report;
  /// CSV tables keyed by "<action>_<grid>".
  std::vector<std::pair<std::string, std::string>> csv_tables;
  int exit_code = kExitPass;
};

/// Runs every action in declaration order. Runtime failures are recorded on
/// the action; actions that reference a failed action are skipped.
ExecutionResult execute_plan(const ExperimentPlan& plan);

/// Byte-stable serialization used for report files.
std::string dump_report(const Json& report);

}  // namespace iqm
