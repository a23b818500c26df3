#include <cmath>

#include <gtest/gtest.h>

#include "iqm/grids.hpp"
#include "support.hpp"

using namespace iqm;
using namespace iqm::testing;

namespace {

std::vector<SpectrumValue> pm() { return {{"-", -1}, {"+", 1}}; }

MatrixXc spin_one_z() {
  MatrixXc m = MatrixXc::Zero(3, 3);
  m(0, 0) = 1;
  m(2, 2) = -1;
  return m;
}

}  // namespace

TEST(GridCatalog, ElementaryGridMatchesSpectrum) {
  GridCatalog cat;
  const auto& g = cat.define_grid("z", pm(), observable("sz", pauli_z()));
  EXPECT_EQ(g.size(), 2u);
  EXPECT_FALSE(g.derived());
  EXPECT_EQ(g.root(), "z");
  EXPECT_EQ(g.codes(), (std::vector<double>{-1, 1}));
}

TEST(GridCatalog, SpectrumMustMatchEigenvalues) {
  GridCatalog cat;
  EXPECT_IQM_ERROR(cat.define_grid("z", {{"a", 0}, {"b", 1}}, observable("sz", pauli_z())), ErrorCode::SpectrumMismatch);
  EXPECT_IQM_ERROR(cat.define_grid("z", {{"a", -1}}, observable("sz", pauli_z())), ErrorCode::SpectrumMismatch);
  EXPECT_IQM_ERROR(cat.define_grid("z", {{"a", 1}, {"b", 1}}, observable("sz", pauli_z())), ErrorCode::NonDistinctCodes);
}

TEST(GridCatalog, DuplicateName) {
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  EXPECT_IQM_ERROR(cat.define_grid("z", pm(), observable("sz", pauli_z())), ErrorCode::DuplicateGridName);
}

TEST(GridCatalog, BinnedGridPartitionsEigenvalues) {
  GridCatalog cat;
  const auto& g = cat.define_binned_grid("m", observable("sz1", spin_one_z()), {-1.5, -0.5, 1.5});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.codes()[0], -1.0);
  EXPECT_DOUBLE_EQ(g.codes()[1], 0.5);
  // Eigenvalues -1, 0, 1: the last two share the upper cell.
  EXPECT_EQ(g.cell_of_eigenspace(), (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_IQM_ERROR(cat.define_binned_grid("gap", observable("sz1", spin_one_z()), {-0.5, 1.5}),
                   ErrorCode::IncompleteBins);
}

TEST(GridCatalog, DerivedGridMergesCollidingValues) {
  GridCatalog cat;
  cat.define_grid("m", {{"-1", -1}, {"0", 0}, {"1", 1}}, observable("sz1", spin_one_z()));
  const auto& sq = cat.derive_grid("m", {"square", [](double x) { return x * x; }}, "m2");
  EXPECT_TRUE(sq.derived());
  EXPECT_EQ(sq.base(), "m");
  EXPECT_EQ(sq.root(), "m");
  EXPECT_EQ(sq.codes(), (std::vector<double>{1, 0}));
  EXPECT_EQ(sq.from_root(), (std::vector<std::size_t>{0, 1, 0}));
  const auto& neg = cat.derive_grid("m2", {"negate", [](double x) { return -x; }}, "neg");
  EXPECT_EQ(neg.root(), "m");
  EXPECT_EQ(neg.from_root(), (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_IQM_ERROR(cat.derive_grid("nope", {"id", [](double x) { return x; }}, "q"), ErrorCode::UnknownBase);
}

TEST(CodingRule, DecodesRegionMembership) {
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const auto ch = make_channel("c", cat.share("z"));
  ASSERT_EQ(ch.coding.outcome_regions.size(), 2u);
  EXPECT_TRUE(ch.coding.regions_disjoint());
  for (std::size_t j = 0; j < 2; ++j) {
    const auto centre = ch.coding.outcome_regions[j].at({0.5, 0.5, 0.5, 0.5});
    EXPECT_EQ(ch.coding.decode(centre), j);
  }
  EXPECT_IQM_ERROR(ch.coding.decode(SpacetimePoint{{5, 5, 5}, 10}), ErrorCode::InvalidChannel);
}

TEST(CodingRule, OverlappingRegionsRejected) {
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const SpacetimeDomain r{{0, 0, 0}, {1, 1, 1}, 1, 2};
  EXPECT_IQM_ERROR(make_channel("c", cat.share("z"), std::nullopt, default_branch_domain(), {r, r}),
                   ErrorCode::InvalidChannel);
}

TEST(Measurement, ConsumesExemplarOnce) {
  Laboratory lab(BackendKind::Quantum);
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const auto ch = make_channel("c", cat.share("z"));
  const auto g = lab.register_generation({"up", SimpleKind{PreparationSpec::basis(2, 0)}});
  SeededStream rng(3);
  auto ex = lab.generate(g, rng);
  const auto rec = measure(ex, ch, lab.backend(), rng);
  EXPECT_TRUE(ex.consumed());
  EXPECT_EQ(rec.value, 1.0);
  EXPECT_EQ(rec.value_label, "+");
  ASSERT_FALSE(rec.marks.empty());
  EXPECT_EQ(ch.coding.decode(rec.marks.front()), rec.index);
  EXPECT_LE(rec.t0, rec.tG);
  EXPECT_LE(rec.tG, rec.tX);
  EXPECT_IQM_ERROR(measure(ex, ch, lab.backend(), rng), ErrorCode::ExemplarConsumed);
}

TEST(Measurement, JointRequiresCompatibility) {
  Laboratory lab(BackendKind::Quantum);
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  cat.define_grid("x", pm(), observable("sx", pauli_x()));
  cat.derive_grid("z", {"square", [](double v) { return v * v; }}, "z2");
  const auto z = make_channel("cz", cat.share("z"));
  const auto x = make_channel("cx", cat.share("x"));
  const auto z2 = make_channel("cz2", cat.share("z2"));
  EXPECT_FALSE(compatible(lab.backend(), z, x));
  EXPECT_TRUE(compatible(lab.backend(), z, z2));
  const auto g = lab.register_generation({"up", SimpleKind{PreparationSpec::basis(2, 0)}});
  SeededStream rng(3);
  auto ex = lab.generate(g, rng);
  EXPECT_IQM_ERROR(measure_joint(ex, z, x, lab.backend(), rng), ErrorCode::IncompatibleGrids);
  auto ex2 = lab.generate(g, rng);
  const auto joint = measure_joint(ex2, z, z2, lab.backend(), rng);
  ASSERT_EQ(joint.records.size(), 2u);
  EXPECT_EQ(joint.records[0].value, 1.0);
  EXPECT_EQ(joint.records[1].value, 1.0);

  Laboratory classical(BackendKind::Classical);
  EXPECT_TRUE(compatible(classical.backend(), z, x));
}

TEST(Measurement, CompleteOverSubsystems) {
  Laboratory lab(BackendKind::Quantum);
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const auto g = lab.register_generation({"pair", SimpleKind{PreparationSpec{{2, 2}, {0, 1, -1, 0}}}});
  const MeasurementChannel both[] = {make_channel("a", cat.share("z"), 0), make_channel("b", cat.share("z"), 1)};
  SeededStream rng(9);
  for (int i = 0; i < 50; ++i) {
    auto ex = lab.generate(g, rng);
    const auto r = measure_complete(ex, both, lab.backend(), rng, i);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_FALSE(r.incomplete);
    EXPECT_EQ(r.records[0].value, -r.records[1].value);
  }
  auto ex = lab.generate(g, rng);
  const auto partial = measure_complete(ex, std::span(both, 1), lab.backend(), rng);
  EXPECT_TRUE(partial.incomplete);
  auto ex3 = lab.generate(g, rng);
  const MeasurementChannel same[] = {make_channel("a", cat.share("z"), 0), make_channel("b", cat.share("z"), 0)};
  EXPECT_IQM_ERROR(measure_complete(ex3, same, lab.backend(), rng), ErrorCode::DuplicateSubsystem);
}

TEST(ChannelSet, ExactJointMatchesHandComputation) {
  Laboratory lab(BackendKind::Quantum);
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const auto g = lab.register_generation({"pair", SimpleKind{PreparationSpec{{2, 2}, {0, 1, -1, 0}}}});
  const Index factors[] = {2, 2};
  const ChannelSet set(lab.backend(), factors, {make_channel("a", cat.share("z"), 0), make_channel("b", cat.share("z"), 1)});
  ASSERT_EQ(set.joint_size(), 4u);
  const auto p = set.exact_joint(lab.oracle_state(g));
  // Outcomes (a, b) in code order (-,-), (-,+), (+,-), (+,+).
  EXPECT_NEAR(p[0], 0.0, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
  EXPECT_NEAR(p[2], 0.5, 1e-12);
  EXPECT_NEAR(p[3], 0.0, 1e-12);
  EXPECT_EQ(set.split_joint(2), (std::vector<std::size_t>{1, 0}));
  const auto m = set.exact_marginal(lab.oracle_state(g), 1);
  EXPECT_NEAR(m[0], 0.5, 1e-12);
}

TEST(TimeOfFlight, DecodesMomentum) {
  const auto r = tof_decode({3, 0, 4}, 6, 1, 2, {0, 0, 0});
  EXPECT_DOUBLE_EQ(r.momentum[0], 1.2);
  EXPECT_DOUBLE_EQ(r.momentum[1], 0.0);
  EXPECT_DOUBLE_EQ(r.momentum[2], 1.6);
  EXPECT_DOUBLE_EQ(r.magnitude, 2.0);
  const auto shifted = tof_decode({4, 1, 5}, 6, 1, 2, {1, 1, 1});
  EXPECT_DOUBLE_EQ(shifted.magnitude, 2.0);
  EXPECT_IQM_ERROR(tof_decode({1, 0, 0}, 1, 1, 1, {0, 0, 0}), ErrorCode::NonPositiveFlightTime);
  EXPECT_IQM_ERROR(tof_decode({1, 0, 0}, 2, 1, 0, {0, 0, 0}), ErrorCode::NonPositiveMass);
}

TEST(GridCatalog, KineticEnergyFromMomentum) {
  GridCatalog cat;
  MatrixXc p = MatrixXc::Zero(4, 4);
  p.diagonal() << -2, -1, 1, 2;
  cat.define_grid("p", {{"-2", -2}, {"-1", -1}, {"1", 1}, {"2", 2}}, observable("p", p));
  const double m = 1;
  const auto& t = cat.derive_grid("p", {"p^2/2m", [m](double v) { return v * v / (2 * m); }}, "T");
  EXPECT_EQ(t.codes(), (std::vector<double>{2, 0.5}));
  EXPECT_EQ(t.from_root(), (std::vector<std::size_t>{0, 1, 1, 0}));

  Laboratory lab(BackendKind::Quantum);
  const auto g = lab.register_generation({"p2", SimpleKind{PreparationSpec::basis(4, 3)}});
  SeededStream rng(1);
  auto ex = lab.generate(g, rng);
  const auto r = measure_joint(ex, make_channel("cp", cat.share("p")), make_channel("cT", cat.share("T")), lab.backend(), rng);
  EXPECT_EQ(r.records[0].value, 2.0);
  EXPECT_EQ(r.records[1].value, 2.0);
}

TEST(GridCatalog, IdentityDerivationKeepsSpectrum) {
  GridCatalog cat;
  const auto& z = cat.define_grid("z", pm(), observable("sz", pauli_z()));
  const auto& same = cat.derive_grid("z", {"identity", [](double v) { return v; }}, "z_id");
  EXPECT_EQ(same.spectrum(), z.spectrum());
  EXPECT_EQ(make_channel("a", cat.share("z")).coding.outcome_regions,
            make_channel("b", cat.share("z_id")).coding.outcome_regions);
}

TEST(GridCatalog, ScreenPositionBinnedIntoEightCells) {
  GridCatalog cat;
  MatrixXc x = MatrixXc::Zero(16, 16);
  for (int i = 0; i < 16; ++i) x(i, i) = -1 + (2.0 * i + 1) / 16;
  std::vector<double> edges;
  for (int k = 0; k <= 8; ++k) edges.push_back(-1 + k * 0.25);
  const auto& g = cat.define_binned_grid("screen", observable("xpos", x), edges, "m");
  ASSERT_EQ(g.size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(g.codes()[k], -1 + 0.125 + k * 0.25);
}

TEST(Measurement, DerivedValueEqualsFunctionOfBaseValue) {
  GridCatalog cat;
  cat.define_grid("z", pm(), observable("sz", pauli_z()));
  cat.derive_grid("z", {"affine", [](double v) { return 3 * v + 1; }}, "z3");
  Laboratory lab(BackendKind::Quantum);
  const double r = 1 / std::sqrt(2.0);
  const auto g = lab.register_generation({"plus", SimpleKind{PreparationSpec{{2}, {r, r}}}});
  const auto base = make_channel("b", cat.share("z"));
  const auto derived = make_channel("d", cat.share("z3"));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SeededStream r1(seed), r2(seed);
    auto e1 = lab.generate(g, r1);
    auto e2 = lab.generate(g, r2);
    const auto vb = measure(e1, base, lab.backend(), r1).value;
    const auto vd = measure(e2, derived, lab.backend(), r2).value;
    EXPECT_EQ(3 * vb + 1, vd);
  }
}

TEST(TimeOfFlight, ZeroDisplacementAndUnitTriangle) {
  const auto still = tof_decode({1, 2, 3}, 5, 1, 3, {1, 2, 3});
  EXPECT_EQ(still.momentum, (Point3{0, 0, 0}));
  EXPECT_EQ(still.magnitude, 0.0);
  EXPECT_NEAR(tof_decode({0.6, 0, 0.8}, 1, 0, 1, {0, 0, 0}).magnitude, 1.0, 1e-15);
}
