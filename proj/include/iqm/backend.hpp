#pragma once

// The factual oracle: produces the states that exemplars carry and the
// outcome statistics that measurements draw from. Two interchangeable
// implementations share one interface so superposition and mixture can be
// contrasted under identical epistemic machinery.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqm/dense.hpp"
#include "iqm/generation.hpp"
#include "iqm/rng.hpp"

namespace iqm {

enum class BackendKind { Quantum, Classical };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind backend_kind_from_string(std::string_view name);

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kDegeneracyTolerance = 1e-9;
inline constexpr double kCommutatorTolerance = 1e-10;

struct StateDescriptor {
  BackendKind kind = BackendKind::Quantum;
  std::vector<Index> factors;
  VectorXc amplitudes;     // quantum: unit-norm amplitude vector
  VectorXr configuration;  // classical: probability vector over configurations

  Index dimension() const noexcept { return total_dimension(factors); }
  std::size_t system_count() const noexcept { return factors.size(); }
};

/// A Hermitian observable with its merged eigensystem.
///
/// Eigenvalues closer than kDegeneracyTolerance (relative) share one
/// eigenspace; `eigenvalues()` lists the distinct merged values ascending and
/// `basis()` holds an orthonormal eigenbasis whose column c belongs to the
/// eigenspace `eigenspace_of_column()[c]`.
class ObservableSpec {
 public:
  ObservableSpec(std::string name, MatrixXc matrix);

  const std::string& name() const noexcept { return name_; }
  const MatrixXc& matrix() const noexcept { return matrix_; }
  Index dimension() const noexcept { return matrix_.rows(); }

  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  const MatrixXc& basis() const noexcept { return basis_; }
  const std::vector<std::size_t>& eigenspace_of_column() const noexcept { return eigenspace_of_column_; }
  /// Unmerged eigenvalue of each basis column.
  const VectorXr& raw_eigenvalues() const noexcept { return raw_eigenvalues_; }

  /// Orthogonal projector onto each merged eigenspace.
  std::vector<MatrixXc> projectors() const;

 private:
  std::string name_;
  MatrixXc matrix_;
  VectorXr raw_eigenvalues_;
  MatrixXc basis_;
  std::vector<double> eigenvalues_;
  std::vector<std::size_t> eigenspace_of_column_;
};

/// An orthonormal basis of a (possibly multi-system) space whose columns are
/// partitioned into outcome cells. This is what a measurement channel reduces
/// to once its grid, binning and subsystem are resolved.
struct OutcomeBasis {
  MatrixXc basis;
  std::vector<std::size_t> cell_of_column;
  std::size_t cell_count = 0;
  /// Source observable, lifted to the full space; used for commutation checks.
  MatrixXc generator;

  Index dimension() const noexcept { return basis.rows(); }

  /// Cells are the observable's merged eigenspaces, relabelled through
  /// `cell_of_eigenspace` when given (binning).
  static OutcomeBasis from_observable(const ObservableSpec& obs,
                                      const std::vector<std::size_t>* cell_of_eigenspace = nullptr,
                                      std::size_t cell_count = 0);

  /// Same measurement acting on factor `k` of a product space.
  OutcomeBasis lifted(std::span<const Index> factors, std::size_t k) const;

  /// Diagonal kernel K(i, cell) = ⟨i|Π_cell|i⟩.
  MatrixXr configuration_kernel() const;
};

/// A measurement made of one or more simultaneously performed components.
/// Outcomes are tuples, encoded mixed-radix with the first component most
/// significant.
class CompiledMeasurement {
 public:
  std::size_t outcome_count() const noexcept { return outcome_count_; }
  const std::vector<std::size_t>& radix() const noexcept { return radix_; }
  Index dimension() const noexcept { return dimension_; }

  std::vector<std::size_t> decode(std::size_t outcome) const;

 private:
  friend class QuantumBackend;
  friend class ClassicalBackend;

  std::vector<std::size_t> radix_;
  std::size_t outcome_count_ = 0;
  Index dimension_ = 0;
  // quantum: joint eigenbasis refined over all components
  MatrixXc basis_;
  std::vector<std::size_t> outcome_of_column_;
  // classical: product response kernel, dimension × outcome_count
  MatrixXr kernel_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendKind kind() const noexcept = 0;

  using ChildResolver = std::function<StateDescriptor(const std::string&)>;

  /// Simple → declared state; Composed → superposition or mixture of the
  /// resolved children; Evolved → resolved base followed by unitary_step.
  StateDescriptor prepare(const GenerationOp& op, const ChildResolver& resolve) const;

  virtual StateDescriptor prepare_simple(const PreparationSpec& spec) const = 0;
  virtual StateDescriptor compose(std::span<const StateDescriptor> children, std::span<const double> weights,
                                  std::span<const double> phases) const = 0;
  virtual StateDescriptor unitary_step(const StateDescriptor& state, const ExternalConditions& conditions,
                                       double dt) const = 0;
  /// Whether `conditions` carry what this backend needs to evolve a state of dimension `d`.
  virtual bool resolvable(const ExternalConditions& conditions, Index d) const = 0;

  /// Compiles simultaneous components; quantum components must pairwise commute.
  virtual std::shared_ptr<const CompiledMeasurement> compile(std::span<const OutcomeBasis> components) const = 0;
  virtual std::vector<double> distribution(const StateDescriptor& state, const CompiledMeasurement& m) const = 0;

  std::vector<double> born_distribution(const StateDescriptor& state, const OutcomeBasis& basis) const;
  /// Exact law over the observable's merged eigenvalues, ascending.
  std::vector<double> born_distribution(const StateDescriptor& state, const ObservableSpec& obs) const;

  /// Draws one outcome; consumes exactly one 64-bit block of `rng`.
  std::size_t sample_outcome(const StateDescriptor& state, const CompiledMeasurement& m, SeededStream& rng) const;
  std::size_t sample_outcome(const StateDescriptor& state, const ObservableSpec& obs, SeededStream& rng) const;

  virtual bool commutes(const MatrixXc& a, const MatrixXc& b) const = 0;
  bool commutes(const ObservableSpec& a, const ObservableSpec& b) const;
};

class QuantumBackend final : public Backend {
 public:
  BackendKind kind() const noexcept override { return BackendKind::Quantum; }
  StateDescriptor prepare_simple(const PreparationSpec& spec) const override;
  StateDescriptor compose(std::span<const StateDescriptor> children, std::span<const double> weights,
                          std::span<const double> phases) const override;
  StateDescriptor unitary_step(const StateDescriptor& state, const ExternalConditions& conditions,
                               double dt) const override;
  bool resolvable(const ExternalConditions& conditions, Index d) const override;
  std::shared_ptr<const CompiledMeasurement> compile(std::span<const OutcomeBasis> components) const override;
  std::vector<double> distribution(const StateDescriptor& state, const CompiledMeasurement& m) const override;
  bool commutes(const MatrixXc& a, const MatrixXc& b) const override;
};

/// Mixture backend: a state is a probability vector over basis
/// configurations (the diagonal of the declared pure state), and each
/// observable acts through its diagonal response kernel.
class ClassicalBackend final : public Backend {
 public:
  BackendKind kind() const noexcept override { return BackendKind::Classical; }
  StateDescriptor prepare_simple(const PreparationSpec& spec) const override;
  StateDescriptor compose(std::span<const StateDescriptor> children, std::span<const double> weights,
                          std::span<const double> phases) const override;
  StateDescriptor unitary_step(const StateDescriptor& state, const ExternalConditions& conditions,
                               double dt) const override;
  bool resolvable(const ExternalConditions& conditions, Index d) const override;
  std::shared_ptr<const CompiledMeasurement> compile(std::span<const OutcomeBasis> components) const override;
  std::vector<double> distribution(const StateDescriptor& state, const CompiledMeasurement& m) const override;
  bool commutes(const MatrixXc&, const MatrixXc&) const override { return true; }
};

std::unique_ptr<Backend> make_backend(BackendKind kind);

/// Index of the first cumulative bin exceeding u; zero-probability outcomes are never returned.
std::size_t pick_outcome(std::span<const double> probabilities, double u);

}  // namespace iqm
