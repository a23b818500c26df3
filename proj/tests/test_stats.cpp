#include <cmath>

#include <gtest/gtest.h>

#include "iqm/stats.hpp"
#include "support.hpp"

using namespace iqm;
using namespace iqm::testing;

namespace {

struct Fixture {
  Laboratory lab{BackendKind::Quantum};
  GridCatalog cat;
  GenerationHandle g;
  MeasurementChannel ch;

  explicit Fixture(double p_up) {
    cat.define_grid("z", {{"-", -1}, {"+", 1}}, observable("sz", pauli_z()));
    ch = make_channel("c", cat.share("z"));
    g = lab.register_generation({"G", SimpleKind{PreparationSpec{{2}, {std::sqrt(p_up), std::sqrt(1 - p_up)}}}});
  }
};

}  // namespace

TEST(Succession, CountsSumToTrials) {
  Fixture f(0.3);
  const auto t = run_succession(f.lab, f.g, f.ch, 5000, SeededStream(1));
  EXPECT_EQ(t.total, 5000u);
  EXPECT_EQ(t.counts[0] + t.counts[1], 5000u);
  EXPECT_EQ(t.half_total, 2500u);
  EXPECT_EQ(t.half_counts[0] + t.half_counts[1], 2500u);
  EXPECT_EQ(t.grid, "z");
  EXPECT_EQ(t.generation, "G");
  EXPECT_NEAR(t.counts[1] / 5000.0, 0.3, 4 * std::sqrt(0.21 / 5000));
}

TEST(Succession, IndependentOfThreadCount) {
  Fixture f(0.42);
  const auto one = run_succession(f.lab, f.g, f.ch, 20000, SeededStream(8), {1});
  const auto four = run_succession(f.lab, f.g, f.ch, 20000, SeededStream(8), {4});
  const auto seven = run_succession(f.lab, f.g, f.ch, 20000, SeededStream(8), {7});
  EXPECT_EQ(one, four);
  EXPECT_EQ(one, seven);
  const auto other = run_succession(f.lab, f.g, f.ch, 20000, SeededStream(9), {1});
  EXPECT_NE(one.counts, other.counts);
}

TEST(Succession, ZeroTrialsRejected) {
  Fixture f(0.5);
  EXPECT_IQM_ERROR(run_succession(f.lab, f.g, f.ch, 0, SeededStream(1)), ErrorCode::InvalidTrialCount);
}

TEST(Law, FrequenciesAreExactRatios) {
  FrequencyTable t{"G", "z", {-1, 1}, {1, 2}, {0, 1}, 3, 1, "s"};
  const auto law = estimate_law(t);
  EXPECT_EQ(law.frequency(0), Ratio(1, 3));
  EXPECT_EQ(law.frequencies()[0] + law.frequencies()[1], Ratio(1));
  // Half sample gives (0, 1); full sample (1/3, 2/3).
  EXPECT_NEAR(law.convergence, 1.0 / 3.0, 1e-12);
  EXPECT_FALSE(law.converged);
}

TEST(Law, EmptyTableRejected) {
  FrequencyTable t{"G", "z", {-1, 1}, {0, 0}, {0, 0}, 0, 0, "s"};
  EXPECT_IQM_ERROR(estimate_law(t), ErrorCode::EmptyTable);
}

TEST(Law, ConvergesForLargeSamples) {
  Fixture f(0.5);
  const auto law = estimate_law(run_succession(f.lab, f.g, f.ch, 100000, SeededStream(2)));
  EXPECT_TRUE(law.converged);
  EXPECT_LT(law.convergence, 0.01);
  ASSERT_EQ(law.wilson_half_width.size(), 2u);
}

TEST(Wilson, MatchesClosedForm) {
  const double z = kWilsonZ95;
  for (auto [k, n] : {std::pair<std::uint64_t, std::uint64_t>{0, 10}, {5, 10}, {37, 100}, {100, 100}}) {
    const double p = double(k) / n;
    const double expected = z * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / (1 + z * z / n);
    EXPECT_NEAR(wilson_half_width(k, n), expected, 1e-12) << k << "/" << n;
  }
}

TEST(Dispersion, PopulationStandardDeviation) {
  const double p[] = {0.25, 0.75}, codes[] = {-1, 1};
  // Mean 0.5, second moment 1.
  EXPECT_NEAR(dispersion(p, codes), std::sqrt(1 - 0.25), 1e-12);
  FrequencyTable t{"G", "z", {-1, 1}, {0, 10}, {0, 5}, 10, 5, "s"};
  EXPECT_DOUBLE_EQ(dispersion(estimate_law(t)), 0.0);
}

TEST(LawDistance, SupNorm) {
  FrequencyTable a{"G", "z", {-1, 1}, {3, 7}, {1, 4}, 10, 5, "s"};
  FrequencyTable b{"G", "z", {-1, 1}, {5, 5}, {2, 3}, 10, 5, "s"};
  EXPECT_NEAR(law_distance(estimate_law(a), estimate_law(b)), 0.2, 1e-12);
  const double exact_law[] = {0.25, 0.75};
  EXPECT_NEAR(law_distance(estimate_law(a), exact_law), 0.05, 1e-12);
  FrequencyTable c{"G", "x", {0, 1}, {5, 5}, {2, 3}, 10, 5, "s"};
  EXPECT_IQM_ERROR(law_distance(estimate_law(a), estimate_law(c)), ErrorCode::SpectrumMismatch);
}

TEST(JointSuccession, MarginalsAddUp) {
  Laboratory lab(BackendKind::Quantum);
  GridCatalog cat;
  cat.define_grid("z", {{"-", -1}, {"+", 1}}, observable("sz", pauli_z()));
  const auto g = lab.register_generation({"pair", SimpleKind{PreparationSpec{{2, 2}, {0, 1, -1, 0}}}});
  const Index factors[] = {2, 2};
  const ChannelSet set(lab.backend(), factors, {make_channel("a", cat.share("z"), 0), make_channel("b", cat.share("z"), 1)});
  const auto joint = run_joint_succession(lab, g, set, 4000, SeededStream(4));
  EXPECT_EQ(joint.total, 4000u);
  EXPECT_EQ(joint.counts[0], 0u);
  EXPECT_EQ(joint.counts[3], 0u);
  const auto first = marginal_table(joint, set, 0, "pair", "s");
  const auto second = marginal_table(joint, set, 1, "pair", "s");
  EXPECT_EQ(first.counts[0], joint.counts[0] + joint.counts[1]);
  EXPECT_EQ(first.counts[0], second.counts[1]);
  EXPECT_EQ(first.total, 4000u);
}

TEST(Succession, SingleTrialOnEigenstate) {
  Fixture f(1.0);
  const auto t = run_succession(f.lab, f.g, f.ch, 1, SeededStream(3));
  EXPECT_EQ(t.counts, (std::vector<std::uint64_t>{0, 1}));
  const auto law = estimate_law(run_succession(f.lab, f.g, f.ch, 1000, SeededStream(3)));
  EXPECT_EQ(law.convergence, 0.0);
  EXPECT_TRUE(law.converged);
}

TEST(Succession, HalfHalfWithinBinomialBand) {
  Fixture f(0.5);
  const auto t = run_succession(f.lab, f.g, f.ch, 100000, SeededStream(12));
  EXPECT_NEAR(double(t.counts[0]), 50000.0, 4 * std::sqrt(100000 * 0.25));
  EXPECT_EQ(t, run_succession(f.lab, f.g, f.ch, 100000, SeededStream(12)));
}

TEST(Law, ExactHalves) {
  FrequencyTable t{"G", "z", {-1, 1}, {50000, 50000}, {26000, 24000}, 100000, 50000, "s"};
  const auto law = estimate_law(t);
  EXPECT_EQ(law.frequency(0), Ratio(1, 2));
  EXPECT_NEAR(law.convergence, 0.02, 1e-12);
}

TEST(Dispersion, HandVariances) {
  const double codes[] = {1, -1};
  const double point[] = {1, 0}, half[] = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(dispersion(point, codes), 0.0);
  EXPECT_DOUBLE_EQ(dispersion(half, codes), 1.0);
  const double skew[] = {0.25, 0.75}, wide[] = {0, 4};
  EXPECT_NEAR(dispersion(skew, wide), std::sqrt(3.0), 1e-12);
}

TEST(LawDistance, Arithmetic) {
  FrequencyTable a{"G", "z", {-1, 1}, {10, 0}, {5, 0}, 10, 5, "s"};
  FrequencyTable b{"G", "z", {-1, 1}, {0, 10}, {0, 5}, 10, 5, "s"};
  FrequencyTable c{"G", "z", {-1, 1}, {6, 4}, {3, 2}, 10, 5, "s"};
  FrequencyTable d{"G", "z", {-1, 1}, {5, 5}, {3, 2}, 10, 5, "s"};
  EXPECT_EQ(law_distance(estimate_law(a), estimate_law(a)), 0.0);
  EXPECT_EQ(law_distance(estimate_law(a), estimate_law(b)), 1.0);
  EXPECT_NEAR(law_distance(estimate_law(c), estimate_law(d)), 0.1, 1e-12);
}
