#pragma once

// Named scenarios wiring the library into complete experiments. Each one
// validates its parameters, runs with its own seed and checks its results
// against expectations computed from the backend oracle.

#include <cstdint>
#include <string>
#include <vector>

#include "iqm/backend.hpp"
#include "iqm/json_io.hpp"
#include "iqm/stats.hpp"

namespace iqm {

struct Expectation {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string scenario;
  std::string backend;
  std::uint64_t seed = 0;
  /// Effective parameters, defaults filled in.
  Json params;
  Json results;
  std::vector<Expectation> expectations;

  bool passed() const;
  Json to_json() const;
};

const std::vector<std::string>& scenario_names();

/// Parameters with their defaults for `name`; UnknownScenario otherwise.
Json scenario_defaults(const std::string& name);

/// Key and type check of `params` against the scenario's declared schema.
void check_scenario_params(const std::string& name, const Json& params);

/// UnknownScenario for an unknown name; SchemaViolation for an unknown
/// parameter, a wrongly typed value or an out-of-range value.
ScenarioReport run_scenario(const std::string& name, const Json& params, std::uint64_t seed,
                            BackendKind backend = BackendKind::Quantum, SuccessionOptions options = {});

}  // namespace iqm
