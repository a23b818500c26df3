#pragma once

// Experiment plans: a single JSON document (schema "iqm.plan/v1") declaring
// observables, external conditions, generations, grids, channels and an
// ordered list of actions.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iqm/backend.hpp"
#include "iqm/generation.hpp"
#include "iqm/grids.hpp"
#include "iqm/json_io.hpp"

namespace iqm {

inline constexpr const char* kPlanSchema = "iqm.plan/v1";
inline constexpr const char* kReportSchema = "iqm.report/v1";

struct ObservableDecl {
  std::string name;
  ComplexRows matrix;
  friend bool operator==(const ObservableDecl&, const ObservableDecl&) = default;
};

struct GenerationDecl {
  std::string label;
  std::string kind;  // simple | composed | evolved
  std::vector<std::size_t> factors;
  std::vector<std::complex<double>> amplitudes;
  std::vector<std::string> children;
  std::vector<double> weights, phases, delays;
  std::string base;
  std::string conditions;
  double duration = 0;
  std::optional<SpacetimeDomain> trunk_domain;
  friend bool operator==(const GenerationDecl&, const GenerationDecl&) = default;
};

struct FunctionDecl {
  std::string kind;  // polynomial | table
  std::vector<double> coefficients;
  std::vector<std::vector<double>> table;  // [x, f(x)] pairs
  friend bool operator==(const FunctionDecl&, const FunctionDecl&) = default;
};

struct GridDecl {
  std::string name;
  std::string observable;
  std::vector<SpectrumValue> spectrum;
  std::optional<std::vector<double>> bins;
  std::string derived_from;
  std::optional<FunctionDecl> function;
  std::string units;
  friend bool operator==(const GridDecl&, const GridDecl&) = default;
};

struct ChannelDecl {
  std::string id;
  std::string grid;
  std::string apparatus;
  std::optional<std::size_t> subsystem;
  std::optional<SpacetimeDomain> branch_domain;
  std::vector<SpacetimeDomain> regions;
  friend bool operator==(const ChannelDecl&, const ChannelDecl&) = default;
};

/// Arguments are checked against the action's declared keys at parse time
/// and kept as JSON.
struct ActionDecl {
  std::string id;
  std::string type;
  Json args = Json::object();
  friend bool operator==(const ActionDecl&, const ActionDecl&) = default;
};

struct OutputDecl {
  std::string report;
  std::string csv_dir;
  friend bool operator==(const OutputDecl&, const OutputDecl&) = default;
};

struct ExperimentPlan {
  std::string schema = kPlanSchema;
  BackendKind backend = BackendKind::Quantum;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  OutputDecl outputs;
  std::vector<ObservableDecl> observables;
  std::vector<ExternalConditions> conditions;
  std::vector<GenerationDecl> generations;
  std::vector<GridDecl> grids;
  std::vector<ChannelDecl> channels;
  std::vector<ActionDecl> actions;
  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

struct Diagnostic {
  std::string severity;  // error | warning
  std::string kind;      // ParseError | SemanticError | Lint
  std::string code;
  std::string message;
  std::string pointer;
  std::size_t line = 0;
  std::size_t column = 0;
};

std::string format_diagnostic(const Diagnostic& d, const std::string& file = {});

struct ParseOptions {
  /// Unknown keys are errors (otherwise warnings).
  bool strict = true;
  std::optional<BackendKind> backend_override;
  std::optional<std::uint64_t> seed_override;
};

struct ParseResult {
  std::optional<ExperimentPlan> plan;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return plan.has_value(); }
  bool has_errors() const;
};

/// Syntax, schema and static semantic checks (references, spectra, joint
/// compatibility). The plan is returned only when no error was found.
ParseResult parse_experiment_spec(const std::string& text, const ParseOptions& options = {});

/// Canonical JSON form; parsing it yields an equal plan.
Json print_plan(const ExperimentPlan& plan);

}  // namespace iqm
