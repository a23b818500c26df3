#include <algorithm>

#include <gtest/gtest.h>

#include "iqm/experiments.hpp"
#include "support.hpp"

using namespace iqm;

namespace {

Json quick(const std::string& name) {
  if (name == "dispersion_panel") return {{"states", 10}, {"trials", 2000}};
  if (name == "rabi_evolution") return {{"trials", 3000}, {"points", 4}};
  return {{"trials", 5000}};
}

}  // namespace

TEST(Scenarios, NamesAndDefaults) {
  const auto& names = scenario_names();
  for (const char* n : {"young_slits", "singlet_pair", "dispersion_panel", "tof_flight", "rabi_evolution"})
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  for (const auto& n : names) {
    const auto d = scenario_defaults(n);
    EXPECT_TRUE(d.is_object());
    EXPECT_TRUE(d.contains("trials")) << n;
    EXPECT_NO_THROW(check_scenario_params(n, d));
  }
  EXPECT_IQM_ERROR(scenario_defaults("nope"), ErrorCode::UnknownScenario);
}

TEST(Scenarios, RejectBadParameters) {
  EXPECT_IQM_ERROR(run_scenario("nope", Json::object(), 1), ErrorCode::UnknownScenario);
  EXPECT_IQM_ERROR(run_scenario("tof_flight", {{"colour", 1}}, 1), ErrorCode::SchemaViolation);
  EXPECT_IQM_ERROR(run_scenario("tof_flight", {{"trials", "many"}}, 1), ErrorCode::SchemaViolation);
  EXPECT_IQM_ERROR(run_scenario("tof_flight", {{"mass", -2}}, 1), ErrorCode::SchemaViolation);
}

class EveryScenario : public ::testing::TestWithParam<std::tuple<std::string, BackendKind>> {};

TEST_P(EveryScenario, PassesItsExpectations) {
  const auto& [name, kind] = GetParam();
  const auto r = run_scenario(name, quick(name), 11, kind);
  EXPECT_EQ(r.scenario, name);
  EXPECT_FALSE(r.expectations.empty());
  for (const auto& e : r.expectations) EXPECT_TRUE(e.passed) << e.name << ": " << e.detail;
  const auto j = r.to_json();
  EXPECT_EQ(j["schema"], "iqm.scenario/v1");
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["passed"], r.passed());
}

INSTANTIATE_TEST_SUITE_P(Scenarios, EveryScenario,
                         ::testing::Combine(::testing::Values("young_slits", "singlet_pair", "dispersion_panel",
                                                              "tof_flight", "rabi_evolution"),
                                            ::testing::Values(BackendKind::Quantum, BackendKind::Classical)));

TEST(Scenarios, DeterministicPerSeed) {
  const auto a = run_scenario("singlet_pair", {{"trials", 3000}}, 5).to_json();
  const auto b = run_scenario("singlet_pair", {{"trials", 3000}}, 5, BackendKind::Quantum, {4}).to_json();
  EXPECT_EQ(a.dump(), b.dump());
  const auto c = run_scenario("singlet_pair", {{"trials", 3000}}, 6).to_json();
  EXPECT_NE(a["results"].dump(), c["results"].dump());
}

TEST(Scenarios, EffectiveParamsIncludeDefaults) {
  const auto r = run_scenario("tof_flight", {{"trials", 50}}, 1);
  EXPECT_EQ(r.params["trials"], 50);
  EXPECT_EQ(r.params["mass"], scenario_defaults("tof_flight")["mass"]);
}

TEST(Scenarios, YoungSlitsDefaultSeedOne) {
  const auto r = run_scenario("young_slits", Json::object(), 1);
  ASSERT_TRUE(r.passed());
  const auto q = r.results["quantum"]["deficit"][1].get<std::string>();
  const auto c = r.results["classical"]["deficit"][1].get<std::string>();
  EXPECT_NEAR(to_double(Ratio(q)), 0.5, 0.01);
  EXPECT_NEAR(to_double(Ratio(c)), 0.0, 0.012);
}
