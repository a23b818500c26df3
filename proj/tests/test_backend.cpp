#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "iqm/backend.hpp"
#include "support.hpp"

using namespace iqm;
using namespace iqm::testing;

namespace {

PreparationSpec qubit(Complex a, Complex b) { return {{2}, {a, b}}; }

}  // namespace

TEST(Observable, MergesDegenerateEigenvalues) {
  MatrixXc m = MatrixXc::Identity(3, 3);
  m(2, 2) = 4;
  const ObservableSpec obs("n", m);
  ASSERT_EQ(obs.eigenvalues().size(), 2u);
  EXPECT_NEAR(obs.eigenvalues()[0], 1.0, 1e-12);
  EXPECT_NEAR(obs.eigenvalues()[1], 4.0, 1e-12);
  const auto proj = obs.projectors();
  ASSERT_EQ(proj.size(), 2u);
  EXPECT_NEAR(proj[0].trace().real(), 2.0, 1e-12);
  EXPECT_NEAR(proj[1].trace().real(), 1.0, 1e-12);
  EXPECT_NEAR((proj[0] + proj[1] - MatrixXc::Identity(3, 3)).norm(), 0.0, 1e-12);
}

TEST(Observable, RejectsNonHermitian) {
  MatrixXc m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_IQM_ERROR(ObservableSpec("bad", m), ErrorCode::NotHermitian);
}

TEST(Observable, RejectsBadDimension) {
  EXPECT_IQM_ERROR(ObservableSpec("one", MatrixXc::Identity(1, 1)), ErrorCode::DimensionMismatch);
  EXPECT_IQM_ERROR(ObservableSpec("huge", MatrixXc::Identity(65, 65)), ErrorCode::DimensionMismatch);
  MatrixXc rect(2, 3);
  rect.setZero();
  EXPECT_IQM_ERROR(ObservableSpec("rect", rect), ErrorCode::DimensionMismatch);
}

TEST(QuantumBackend, BornRuleOnSpinStates) {
  const auto b = make_backend(BackendKind::Quantum);
  const double s = 1 / std::sqrt(2.0);
  const auto plus = b->prepare_simple(qubit(s, s));
  const ObservableSpec x("x", pauli_x()), z("z", pauli_z()), y("y", pauli_y());
  const auto px = b->born_distribution(plus, x);
  EXPECT_NEAR(px[0], 0.0, 1e-12);
  EXPECT_NEAR(px[1], 1.0, 1e-12);
  const auto pz = b->born_distribution(plus, z);
  EXPECT_NEAR(pz[0], 0.5, 1e-12);
  const auto py = b->born_distribution(b->prepare_simple(qubit(s, Complex(0, s))), y);
  EXPECT_NEAR(py[1], 1.0, 1e-12);
}

TEST(QuantumBackend, NormalizesDeclaredAmplitudes) {
  const auto b = make_backend(BackendKind::Quantum);
  const auto st = b->prepare_simple(qubit(3, 4));
  EXPECT_NEAR(st.amplitudes.norm(), 1.0, 1e-12);
  const auto p = b->born_distribution(st, ObservableSpec("z", pauli_z()));
  // Eigenvalue -1 belongs to |1⟩.
  EXPECT_NEAR(p[0], 16.0 / 25.0, 1e-12);
  EXPECT_NEAR(p[1], 9.0 / 25.0, 1e-12);
}

TEST(QuantumBackend, ZeroAmplitudesRejected) {
  const auto b = make_backend(BackendKind::Quantum);
  EXPECT_THROW(b->prepare_simple(qubit(0, 0)), Error);
}

TEST(QuantumBackend, CompositionInterferes) {
  const auto b = make_backend(BackendKind::Quantum);
  const double s = 1 / std::sqrt(2.0);
  const StateDescriptor kids[] = {b->prepare_simple(qubit(s, s)), b->prepare_simple(qubit(s, -s))};
  const double w[] = {1, 1}, ph[] = {0, 0};
  const auto sum = b->compose(kids, w, ph);
  const auto p = b->born_distribution(sum, ObservableSpec("z", pauli_z()));
  EXPECT_NEAR(p[1], 1.0, 1e-12);  // |+⟩ + |−⟩ ∝ |0⟩
  const double ph2[] = {0, std::numbers::pi};
  const auto diff = b->compose(kids, w, ph2);
  EXPECT_NEAR(b->born_distribution(diff, ObservableSpec("z", pauli_z()))[0], 1.0, 1e-12);
}

TEST(QuantumBackend, DestructiveCompositionIsDegenerate) {
  const auto b = make_backend(BackendKind::Quantum);
  const StateDescriptor kids[] = {b->prepare_simple(qubit(1, 0)), b->prepare_simple(qubit(1, 0))};
  const double w[] = {1, 1}, ph[] = {0, std::numbers::pi};
  EXPECT_IQM_ERROR(b->compose(kids, w, ph), ErrorCode::DegenerateSuperposition);
}

TEST(ClassicalBackend, CompositionMixes) {
  const auto b = make_backend(BackendKind::Classical);
  const double s = 1 / std::sqrt(2.0);
  const StateDescriptor kids[] = {b->prepare_simple(qubit(s, s)), b->prepare_simple(qubit(s, -s))};
  const double w[] = {1, 1}, ph[] = {0, 0};
  const auto mix = b->compose(kids, w, ph);
  const auto p = b->born_distribution(mix, ObservableSpec("z", pauli_z()));
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
  EXPECT_NEAR(mix.configuration.sum(), 1.0, 1e-12);
}

TEST(QuantumBackend, RabiEvolutionMatchesClosedForm) {
  const auto b = make_backend(BackendKind::Quantum);
  const double omega = 2 * std::numbers::pi;
  ExternalConditions c{"drive", ComplexRows{{0, omega / 2}, {omega / 2, 0}}, std::nullopt};
  const auto up = b->prepare_simple(qubit(1, 0));
  const ObservableSpec z("z", pauli_z());
  for (double t : {0.0, 0.1, 0.25, 0.4, 0.5}) {
    const auto st = b->unitary_step(up, c, t);
    EXPECT_NEAR(b->born_distribution(st, z)[1], std::pow(std::cos(omega * t / 2), 2), 1e-10) << t;
  }
}

TEST(ClassicalBackend, RateMatrixEvolution) {
  const auto b = make_backend(BackendKind::Classical);
  const double g = 1.5;
  ExternalConditions c{"flip", std::nullopt, RealRows{{-g, g}, {g, -g}}};
  const auto up = b->prepare_simple(qubit(1, 0));
  const ObservableSpec z("z", pauli_z());
  for (double t : {0.0, 0.2, 1.0}) {
    const auto st = b->unitary_step(up, c, t);
    EXPECT_NEAR(b->born_distribution(st, z)[1], 0.5 * (1 + std::exp(-2 * g * t)), 1e-10) << t;
  }
  EXPECT_FALSE(b->resolvable(ExternalConditions{"none", ComplexRows{{0, 1}, {1, 0}}, std::nullopt}, 2));
}

TEST(Backends, CommutationDiffers) {
  const auto q = make_backend(BackendKind::Quantum);
  const auto c = make_backend(BackendKind::Classical);
  EXPECT_FALSE(q->commutes(pauli_x(), pauli_z()));
  EXPECT_TRUE(q->commutes(pauli_z(), pauli_z()));
  EXPECT_TRUE(c->commutes(pauli_x(), pauli_z()));
}

TEST(Backends, SampleFrequenciesApproachBorn) {
  const auto b = make_backend(BackendKind::Quantum);
  const auto st = b->prepare_simple(qubit(std::sqrt(0.3), std::sqrt(0.7)));
  const ObservableSpec z("z", pauli_z());
  SeededStream rng(11);
  const int n = 100000;
  int up = 0;
  for (int i = 0; i < n; ++i) up += b->sample_outcome(st, z, rng) == 1;
  EXPECT_NEAR(up / double(n), 0.3, 4 * std::sqrt(0.21 / n));
  EXPECT_EQ(rng.draws(), static_cast<std::uint64_t>(n));
}

TEST(PickOutcome, SkipsZeroProbabilityOutcomes) {
  const double p[] = {0.0, 0.5, 0.0, 0.5};
  EXPECT_EQ(pick_outcome(p, 0.0), 1u);
  EXPECT_EQ(pick_outcome(p, 0.49), 1u);
  EXPECT_EQ(pick_outcome(p, 0.5), 3u);
  EXPECT_EQ(pick_outcome(p, 0.999999), 3u);
}

TEST(OutcomeBasis, LiftedToProductSpace) {
  const auto b = make_backend(BackendKind::Quantum);
  // |01⟩: first system up, second down.
  const auto st = b->prepare_simple({{2, 2}, {0, 1, 0, 0}});
  const ObservableSpec z("z", pauli_z());
  const Index factors[] = {2, 2};
  const auto first = OutcomeBasis::from_observable(z).lifted(factors, 0);
  const auto second = OutcomeBasis::from_observable(z).lifted(factors, 1);
  EXPECT_NEAR(b->born_distribution(st, first)[1], 1.0, 1e-12);
  EXPECT_NEAR(b->born_distribution(st, second)[0], 1.0, 1e-12);
}

TEST(BackendKindNames, RoundTrip) {
  EXPECT_EQ(backend_kind_from_string(to_string(BackendKind::Quantum)), BackendKind::Quantum);
  EXPECT_EQ(backend_kind_from_string(to_string(BackendKind::Classical)), BackendKind::Classical);
}

TEST(QuantumBackend, EigenstateSamplesAreCertain) {
  const auto b = make_backend(BackendKind::Quantum);
  const auto st = b->prepare_simple(PreparationSpec::basis(2, 0));
  const ObservableSpec z("z", pauli_z());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeededStream rng(seed);
    EXPECT_EQ(b->sample_outcome(st, z, rng), 1u);
  }
}

TEST(QuantumBackend, SamplingIsReproducible) {
  const auto b = make_backend(BackendKind::Quantum);
  const double s = 1 / std::sqrt(2.0);
  const auto st = b->prepare_simple(qubit(s, s));
  const ObservableSpec z("z", pauli_z());
  SeededStream r1(21), r2(21);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(b->sample_outcome(st, z, r1), b->sample_outcome(st, z, r2));
}

TEST(QuantumBackend, EvolutionPreservesNorm) {
  const auto b = make_backend(BackendKind::Quantum);
  const ExternalConditions c{"h", ComplexRows{{0.7, {0.2, -1.1}}, {{0.2, 1.1}, -0.4}}, std::nullopt};
  auto st = b->prepare_simple(qubit(0.6, Complex(0, 0.8)));
  const auto start = st.amplitudes;
  EXPECT_NEAR((b->unitary_step(st, c, 0.0).amplitudes - start).norm(), 0.0, 1e-15);
  for (int i = 0; i < 1000; ++i) st = b->unitary_step(st, c, 0.013);
  EXPECT_NEAR(st.amplitudes.norm(), 1.0, 1e-9);
}

TEST(QuantumBackend, QuarterPeriodEqualizesAmplitudes) {
  const auto b = make_backend(BackendKind::Quantum);
  const double omega = 2 * std::numbers::pi;
  const ExternalConditions c{"drive", ComplexRows{{0, omega / 2}, {omega / 2, 0}}, std::nullopt};
  const auto st = b->unitary_step(b->prepare_simple(qubit(1, 0)), c, 0.25);
  EXPECT_NEAR(std::abs(st.amplitudes[0]), std::abs(st.amplitudes[1]), 1e-12);
}
