#include "iqm/backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>

#include "iqm/error.hpp"

namespace iqm {
namespace {

void check_dimension(Index d) {
  if (d < 2 || d > kMaxDimension)
    fail(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(d) + " outside [2, 64]");
}

std::vector<Index> to_index_factors(const std::vector<std::size_t>& factors) {
  std::vector<Index> out;
  out.reserve(factors.size());
  for (auto f : factors) out.push_back(static_cast<Index>(f));
  return out;
}

void check_same_shape(std::span<const StateDescriptor> children) {
  for (const auto& c : children)
    if (c.factors != children.front().factors)
      fail(ErrorCode::DimensionMismatch, "composed children have different factor dimensions");
}

}  // namespace

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::Quantum ? "quantum" : "classical";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "quantum") return BackendKind::Quantum;
  if (name == "classical") return BackendKind::Classical;
  fail(ErrorCode::BackendUnavailable, "unknown backend '" + std::string(name) + "'");
}

std::unique_ptr<Backend> make_backend(BackendKind kind) {
  if (kind == BackendKind::Quantum) return std::make_unique<QuantumBackend>();
  return std::make_unique<ClassicalBackend>();
}

//---------------------------------------------------------------------------//
// Observables
//---------------------------------------------------------------------------//

ObservableSpec::ObservableSpec(std::string name, MatrixXc matrix) : name_(std::move(name)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols())
    fail(ErrorCode::DimensionMismatch, "observable '" + name_ + "' is not square");
  if (matrix_.rows() < 2 || matrix_.rows() > kMaxDimension)
    fail(ErrorCode::DimensionMismatch, "observable '" + name_ + "' dimension outside [2, 64]");
  if (!is_hermitian(matrix_, kHermitianTolerance))
    fail(ErrorCode::NotHermitian, "observable '" + name_ + "' differs from its adjoint");

  Eigen::SelfAdjointEigenSolver<MatrixXc> solver(matrix_);
  raw_eigenvalues_ = solver.eigenvalues();
  basis_ = solver.eigenvectors();

  eigenspace_of_column_.resize(static_cast<std::size_t>(raw_eigenvalues_.size()));
  std::vector<double> sum;
  std::vector<int> members;
  for (Index c = 0; c < raw_eigenvalues_.size(); ++c) {
    const double lambda = raw_eigenvalues_(c);
    if (c > 0) {
      const double prev = raw_eigenvalues_(c - 1);
      const double scale = std::max({1.0, std::abs(lambda), std::abs(prev)});
      if (lambda - prev < kDegeneracyTolerance * scale) {
        eigenspace_of_column_[static_cast<std::size_t>(c)] = sum.size() - 1;
        sum.back() += lambda;
        ++members.back();
        continue;
      }
    }
    eigenspace_of_column_[static_cast<std::size_t>(c)] = sum.size();
    sum.push_back(lambda);
    members.push_back(1);
  }
  eigenvalues_.resize(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) eigenvalues_[k] = sum[k] / members[k];
}

std::vector<MatrixXc> ObservableSpec::projectors() const {
  const Index d = dimension();
  std::vector<MatrixXc> out(eigenvalues_.size(), MatrixXc::Zero(d, d));
  for (Index c = 0; c < d; ++c)
    out[eigenspace_of_column_[static_cast<std::size_t>(c)]] += basis_.col(c) * basis_.col(c).adjoint();
  return out;
}

OutcomeBasis OutcomeBasis::from_observable(const ObservableSpec& obs, const std::vector<std::size_t>* cell_of_eigenspace,
                                           std::size_t cell_count) {
  OutcomeBasis out;
  out.basis = obs.basis();
  out.generator = obs.matrix();
  out.cell_of_column = obs.eigenspace_of_column();
  out.cell_count = obs.eigenvalues().size();
  if (cell_of_eigenspace != nullptr) {
    for (auto& c : out.cell_of_column) c = cell_of_eigenspace->at(c);
    out.cell_count = cell_count;
  }
  return out;
}

OutcomeBasis OutcomeBasis::lifted(std::span<const Index> factors, std::size_t k) const {
  if (k >= factors.size())
    fail(ErrorCode::DimensionMismatch, "subsystem index " + std::to_string(k) + " out of range");
  if (factors[k] != dimension())
    fail(ErrorCode::DimensionMismatch, "observable dimension " + std::to_string(dimension()) +
                                           " does not match subsystem dimension " + std::to_string(factors[k]));
  if (factors.size() == 1) return *this;

  const Index left = total_dimension(factors.subspan(0, k));
  const Index right = total_dimension(factors.subspan(k + 1));
  OutcomeBasis out;
  out.cell_count = cell_count;
  out.generator = lift_to_factor<double>(generator, factors, k);
  out.basis = lift_to_factor<double>(basis, factors, k);
  out.cell_of_column.resize(static_cast<std::size_t>(out.basis.cols()));
  // Column index of I_left ⊗ B ⊗ I_right is (l·d + c)·right + r.
  const Index d = dimension();
  for (Index l = 0; l < left; ++l)
    for (Index c = 0; c < d; ++c)
      for (Index r = 0; r < right; ++r)
        out.cell_of_column[static_cast<std::size_t>((l * d + c) * right + r)] =
            cell_of_column[static_cast<std::size_t>(c)];
  return out;
}

MatrixXr OutcomeBasis::configuration_kernel() const {
  MatrixXr k = MatrixXr::Zero(dimension(), static_cast<Index>(cell_count));
  for (Index c = 0; c < basis.cols(); ++c) {
    const auto cell = static_cast<Index>(cell_of_column[static_cast<std::size_t>(c)]);
    k.col(cell) += basis.col(c).cwiseAbs2();
  }
  return k;
}

std::vector<std::size_t> CompiledMeasurement::decode(std::size_t outcome) const {
  std::vector<std::size_t> out(radix_.size());
  for (std::size_t k = radix_.size(); k-- > 0;) {
    out[k] = outcome % radix_[k];
    outcome /= radix_[k];
  }
  return out;
}

//---------------------------------------------------------------------------//
// Shared backend logic
//---------------------------------------------------------------------------//

StateDescriptor Backend::prepare(const GenerationOp& op, const ChildResolver& resolve) const {
  if (const auto* simple = std::get_if<SimpleKind>(&op.kind)) return prepare_simple(simple->preparation);
  if (const auto* composed = std::get_if<ComposedKind>(&op.kind)) {
    std::vector<StateDescriptor> children;
    children.reserve(composed->children.size());
    for (const auto& label : composed->children) children.push_back(resolve(label));
    return compose(children, composed->weights, composed->phases);
  }
  const auto& evolved = std::get<EvolvedKind>(op.kind);
  return unitary_step(resolve(evolved.base), evolved.conditions, evolved.duration);
}

std::vector<double> Backend::born_distribution(const StateDescriptor& state, const OutcomeBasis& basis) const {
  const OutcomeBasis components[] = {basis};
  return distribution(state, *compile(components));
}

std::vector<double> Backend::born_distribution(const StateDescriptor& state, const ObservableSpec& obs) const {
  return born_distribution(state, OutcomeBasis::from_observable(obs));
}

std::size_t Backend::sample_outcome(const StateDescriptor& state, const CompiledMeasurement& m,
                                    SeededStream& rng) const {
  const auto p = distribution(state, m);
  return pick_outcome(p, rng.next_unit());
}

std::size_t Backend::sample_outcome(const StateDescriptor& state, const ObservableSpec& obs, SeededStream& rng) const {
  const OutcomeBasis components[] = {OutcomeBasis::from_observable(obs)};
  return sample_outcome(state, *compile(components), rng);
}

bool Backend::commutes(const ObservableSpec& a, const ObservableSpec& b) const {
  if (a.dimension() != b.dimension())
    fail(ErrorCode::DimensionMismatch, "commutation check between observables of different dimension");
  return commutes(a.matrix(), b.matrix());
}

std::size_t pick_outcome(std::span<const double> p, double u) {
  double cumulative = 0;
  std::size_t last_possible = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0) continue;
    last_possible = j;
    cumulative += p[j];
    if (u < cumulative) return j;
  }
  return last_possible;
}

//---------------------------------------------------------------------------//
// Quantum backend
//---------------------------------------------------------------------------//

StateDescriptor QuantumBackend::prepare_simple(const PreparationSpec& spec) const {
  StateDescriptor s;
  s.kind = BackendKind::Quantum;
  s.factors = to_index_factors(spec.factors);
  const Index d = s.dimension();
  check_dimension(d);
  if (static_cast<Index>(spec.amplitudes.size()) != d)
    fail(ErrorCode::DimensionMismatch, "amplitude count " + std::to_string(spec.amplitudes.size()) +
                                           " does not match dimension " + std::to_string(d));
  s.amplitudes = Eigen::Map<const VectorXc>(spec.amplitudes.data(), d);
  const double norm = s.amplitudes.norm();
  if (!(norm > 0) || !std::isfinite(norm)) fail(ErrorCode::InvalidGeneration, "amplitude vector has zero norm");
  s.amplitudes /= norm;
  return s;
}

StateDescriptor QuantumBackend::compose(std::span<const StateDescriptor> children, std::span<const double> weights,
                                        std::span<const double> phases) const {
  check_same_shape(children);
  StateDescriptor s;
  s.kind = BackendKind::Quantum;
  s.factors = children.front().factors;
  // A single non-zero weight reproduces that child; its phase is global.
  const auto nonzero = std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0; });
  if (nonzero == 1) {
    const auto i = static_cast<std::size_t>(
        std::find_if(weights.begin(), weights.end(), [](double w) { return w != 0; }) - weights.begin());
    s.amplitudes = children[i].amplitudes;
    return s;
  }
  s.amplitudes = VectorXc::Zero(s.dimension());
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (weights[i] == 0) continue;
    s.amplitudes += std::polar(std::sqrt(weights[i]), phases[i]) * children[i].amplitudes;
  }
  const double norm = s.amplitudes.norm();
  if (norm < kNormTolerance)
    fail(ErrorCode::DegenerateSuperposition, "composed amplitudes cancel to the zero vector");
  s.amplitudes /= norm;
  return s;
}

bool QuantumBackend::resolvable(const ExternalConditions& conditions, Index d) const {
  if (!conditions.generator) return false;
  const MatrixXc h = to_complex_matrix(*conditions.generator);
  return h.rows() == d && h.cols() == d && is_hermitian(h, kHermitianTolerance);
}

StateDescriptor QuantumBackend::unitary_step(const StateDescriptor& state, const ExternalConditions& conditions,
                                             double dt) const {
  if (!resolvable(conditions, state.dimension()))
    fail(ErrorCode::UnresolvableConditions,
         "conditions '" + conditions.name + "' carry no Hermitian generator of dimension " +
             std::to_string(state.dimension()));
  if (dt == 0) return state;
  StateDescriptor s = state;
  s.amplitudes = hermitian_propagator<double>(to_complex_matrix(*conditions.generator), dt) * state.amplitudes;
  return s;
}

bool QuantumBackend::commutes(const MatrixXc& a, const MatrixXc& b) const {
  if (a.rows() != b.rows()) fail(ErrorCode::DimensionMismatch, "commutation check across dimensions");
  return max_abs_entry(commutator(a, b)) <= kCommutatorTolerance;
}

std::shared_ptr<const CompiledMeasurement> QuantumBackend::compile(std::span<const OutcomeBasis> components) const {
  if (components.empty()) fail(ErrorCode::InvalidChannel, "measurement without components");
  const Index d = components.front().dimension();
  for (const auto& c : components)
    if (c.dimension() != d) fail(ErrorCode::DimensionMismatch, "measurement components of different dimension");
  for (std::size_t i = 0; i < components.size(); ++i)
    for (std::size_t j = i + 1; j < components.size(); ++j)
      if (!commutes(components[i].generator, components[j].generator))
        fail(ErrorCode::IncompatibleGrids, "measurement components do not commute");

  auto m = std::make_shared<CompiledMeasurement>();
  m->dimension_ = d;
  m->basis_ = components.front().basis;
  m->outcome_of_column_ = components.front().cell_of_column;
  m->radix_.push_back(components.front().cell_count);

  for (std::size_t k = 1; k < components.size(); ++k) {
    const auto& next = components[k];
    // Operator whose eigenvalue on each cell of `next` is that cell's index.
    VectorXr labels(d);
    for (Index c = 0; c < d; ++c) labels(c) = static_cast<double>(next.cell_of_column[static_cast<std::size_t>(c)]);
    const MatrixXc label_op = next.basis * labels.cast<Complex>().asDiagonal() * next.basis.adjoint();

    MatrixXc refined(d, d);
    std::vector<std::size_t> refined_outcome(static_cast<std::size_t>(d));
    Index filled = 0;
    std::vector<std::size_t> groups(m->outcome_of_column_);
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    for (std::size_t group : groups) {
      std::vector<Index> cols;
      for (Index c = 0; c < d; ++c)
        if (m->outcome_of_column_[static_cast<std::size_t>(c)] == group) cols.push_back(c);
      MatrixXc block(d, static_cast<Index>(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i) block.col(static_cast<Index>(i)) = m->basis_.col(cols[i]);
      const MatrixXc restricted = block.adjoint() * label_op * block;
      Eigen::SelfAdjointEigenSolver<MatrixXc> solver(restricted);
      const MatrixXc vectors = block * solver.eigenvectors();
      for (Index i = 0; i < vectors.cols(); ++i) {
        const double lambda = solver.eigenvalues()(i);
        const double label = std::round(lambda);
        if (std::abs(lambda - label) > 1e-6)
          fail(ErrorCode::IncompatibleGrids, "measurement components share no common eigenbasis");
        refined.col(filled) = vectors.col(i);
        refined_outcome[static_cast<std::size_t>(filled)] = group * next.cell_count + static_cast<std::size_t>(label);
        ++filled;
      }
    }
    m->basis_ = std::move(refined);
    m->outcome_of_column_ = std::move(refined_outcome);
    m->radix_.push_back(next.cell_count);
  }
  m->outcome_count_ = std::accumulate(m->radix_.begin(), m->radix_.end(), std::size_t{1}, std::multiplies<>());
  return m;
}

std::vector<double> QuantumBackend::distribution(const StateDescriptor& state, const CompiledMeasurement& m) const {
  if (state.kind != BackendKind::Quantum) fail(ErrorCode::BackendUnavailable, "state was not prepared by the quantum backend");
  if (state.dimension() != m.dimension())
    fail(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(state.dimension()) +
                                           " vs measurement dimension " + std::to_string(m.dimension()));
  const VectorXc c = m.basis_.adjoint() * state.amplitudes;
  std::vector<double> p(m.outcome_count(), 0.0);
  for (Index i = 0; i < c.size(); ++i) p[m.outcome_of_column_[static_cast<std::size_t>(i)]] += std::norm(c(i));
  return p;
}

//---------------------------------------------------------------------------//
// Classical backend
//---------------------------------------------------------------------------//

StateDescriptor ClassicalBackend::prepare_simple(const PreparationSpec& spec) const {
  StateDescriptor s;
  s.kind = BackendKind::Classical;
  s.factors = to_index_factors(spec.factors);
  const Index d = s.dimension();
  check_dimension(d);
  if (static_cast<Index>(spec.amplitudes.size()) != d)
    fail(ErrorCode::DimensionMismatch, "amplitude count " + std::to_string(spec.amplitudes.size()) +
                                           " does not match dimension " + std::to_string(d));
  s.configuration = Eigen::Map<const VectorXc>(spec.amplitudes.data(), d).cwiseAbs2();
  const double total = s.configuration.sum();
  if (!(total > 0) || !std::isfinite(total)) fail(ErrorCode::InvalidGeneration, "amplitude vector has zero norm");
  s.configuration /= total;
  return s;
}

StateDescriptor ClassicalBackend::compose(std::span<const StateDescriptor> children, std::span<const double> weights,
                                          std::span<const double>) const {
  check_same_shape(children);
  StateDescriptor s;
  s.kind = BackendKind::Classical;
  s.factors = children.front().factors;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  // A single non-zero weight reproduces that child bit-for-bit.
  const auto nonzero = std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0; });
  if (nonzero == 1) {
    const auto i = static_cast<std::size_t>(
        std::find_if(weights.begin(), weights.end(), [](double w) { return w != 0; }) - weights.begin());
    s.configuration = children[i].configuration;
    return s;
  }
  s.configuration = VectorXr::Zero(s.dimension());
  for (std::size_t i = 0; i < children.size(); ++i) s.configuration += (weights[i] / total) * children[i].configuration;
  return s;
}

bool ClassicalBackend::resolvable(const ExternalConditions& conditions, Index d) const {
  if (!conditions.rate_matrix) return false;
  const MatrixXr q = to_real_matrix(*conditions.rate_matrix);
  if (q.rows() != d || q.cols() != d) return false;
  for (Index j = 0; j < d; ++j) {
    if (std::abs(q.col(j).sum()) > 1e-12) return false;
    for (Index i = 0; i < d; ++i)
      if (i != j && q(i, j) < 0) return false;
  }
  return true;
}

StateDescriptor ClassicalBackend::unitary_step(const StateDescriptor& state, const ExternalConditions& conditions,
                                               double dt) const {
  if (!resolvable(conditions, state.dimension()))
    fail(ErrorCode::UnresolvableConditions, "conditions '" + conditions.name +
                                                "' carry no rate matrix of dimension " +
                                                std::to_string(state.dimension()));
  if (dt == 0) return state;
  StateDescriptor s = state;
  const MatrixXr q = to_real_matrix(*conditions.rate_matrix) * dt;
  s.configuration = (q.exp() * state.configuration).cwiseMax(0.0);
  s.configuration /= s.configuration.sum();
  return s;
}

std::shared_ptr<const CompiledMeasurement> ClassicalBackend::compile(std::span<const OutcomeBasis> components) const {
  if (components.empty()) fail(ErrorCode::InvalidChannel, "measurement without components");
  const Index d = components.front().dimension();
  auto m = std::make_shared<CompiledMeasurement>();
  m->dimension_ = d;
  m->kernel_ = MatrixXr::Ones(d, 1);
  for (const auto& c : components) {
    if (c.dimension() != d) fail(ErrorCode::DimensionMismatch, "measurement components of different dimension");
    const MatrixXr k = c.configuration_kernel();
    MatrixXr product(d, m->kernel_.cols() * k.cols());
    for (Index a = 0; a < m->kernel_.cols(); ++a)
      for (Index b = 0; b < k.cols(); ++b) product.col(a * k.cols() + b) = m->kernel_.col(a).cwiseProduct(k.col(b));
    m->kernel_ = std::move(product);
    m->radix_.push_back(c.cell_count);
  }
  m->outcome_count_ = static_cast<std::size_t>(m->kernel_.cols());
  return m;
}

std::vector<double> ClassicalBackend::distribution(const StateDescriptor& state, const CompiledMeasurement& m) const {
  if (state.kind != BackendKind::Classical)
    fail(ErrorCode::BackendUnavailable, "state was not prepared by the classical backend");
  if (state.dimension() != m.dimension())
    fail(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(state.dimension()) +
                                           " vs measurement dimension " + std::to_string(m.dimension()));
  const VectorXr p = m.kernel_.transpose() * state.configuration;
  return {p.data(), p.data() + p.size()};
}

}  // namespace iqm
