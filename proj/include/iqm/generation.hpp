#pragma once

// Declarative descriptions of generation operations. These are plain values:
// the registry stores them, the backend turns them into states.

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iqm/spacetime.hpp"

namespace iqm {

using ComplexRows = std::vector<std::vector<std::complex<double>>>;
using RealRows = std::vector<std::vector<double>>;

/// Declared initial state of a simple generation: factor dimensions of the
/// n-system space and the (not necessarily normalized) amplitude vector.
struct PreparationSpec {
  std::vector<std::size_t> factors;
  std::vector<std::complex<double>> amplitudes;

  /// Basis state `index` in a single system of dimension `dimension`.
  static PreparationSpec basis(std::size_t dimension, std::size_t index);

  friend bool operator==(const PreparationSpec&, const PreparationSpec&) = default;
};

/// External conditions applied during an evolution. `generator` is the
/// Hermitian generator (rad/s) used by the quantum backend; `rate_matrix` is
/// the column-stochastic rate generator used by the classical backend.
struct ExternalConditions {
  std::string name;
  std::optional<ComplexRows> generator;
  std::optional<RealRows> rate_matrix;

  /// True when a non-zero generator is declared (the system is not in free flight).
  bool fields_active() const;

  friend bool operator==(const ExternalConditions&, const ExternalConditions&) = default;
};

struct SimpleKind {
  PreparationSpec preparation;
  friend bool operator==(const SimpleKind&, const SimpleKind&) = default;
};

/// Composition of registered generations. A filter is a weight, a delay is
/// carried as a phase; `delays` records the declared delay values verbatim.
struct ComposedKind {
  std::vector<std::string> children;
  std::vector<double> weights;
  std::vector<double> phases;
  std::vector<double> delays;
  friend bool operator==(const ComposedKind&, const ComposedKind&) = default;
};

struct EvolvedKind {
  std::string base;
  ExternalConditions conditions;
  double duration = 0;
  friend bool operator==(const EvolvedKind&, const EvolvedKind&) = default;
};

struct GenerationOp {
  std::string label;
  std::variant<SimpleKind, ComposedKind, EvolvedKind> kind;
  SpacetimeDomain trunk_domain{{0, 0, 0}, {1, 1, 1}, 0, 0};
  std::size_t system_count = 1;

  friend bool operator==(const GenerationOp&, const GenerationOp&) = default;
};

}  // namespace iqm
