#include <gtest/gtest.h>

#include <algorithm>

#include "cramer/io.hpp"
#include "cramer/verify.hpp"

using namespace cramer;

namespace {

const std::filesystem::path data_dir = CRAMER_DATA_DIR;

SuiteOptions small_suite() {
  SuiteOptions o;
  o.trials = 20;
  o.mc_samples = 20000;
  o.seed = 5;
  return o;
}

std::vector<CheckReport> without_runtime(std::vector<CheckReport> reports) {
  for (CheckReport &r : reports) {
    r.runtime = 0.0;
  }
  return reports;
}

} // namespace

TEST(RandomInstances, DeterministicAndValid) {
  SplitMix64 a(3), b(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_distribution(a, {-1.0, 2.0});
    EXPECT_EQ(p, random_distribution(b, {-1.0, 2.0}));
    EXPECT_GE(p.size(), 1u);
    EXPECT_LE(p.size(), 6u);
    EXPECT_GE(p.atoms().front().location, -1.0);
    EXPECT_LE(p.atoms().back().location, 2.0);
  }
  SplitMix64 rng(4);
  const FiniteMdp m = random_mdp(rng, 4, 3, 0.7);
  EXPECT_LE(m.reward_bound(), 1.0);
  EXPECT_EQ(m.transition_matrix().rows(), 12);
}

TEST(CoefficientGap, Examples) {
  const auto u = SignedExpSum::from_terms({{0.0, 1.0}, {1.0, -1.0}});
  const auto v = SignedExpSum::from_terms({{0.0, 1.0}, {2.0, -0.5}});
  EXPECT_EQ(max_coefficient_gap(u, u), 0.0);
  EXPECT_EQ(max_coefficient_gap(u, v), 1.0);
}

TEST(Checks, ContractionOnRandomModels) {
  for (std::uint64_t i = 0; i < 5; ++i) {
    SplitMix64 rng = SplitMix64::stream(61, i);
    const FiniteMdp m = random_mdp(rng, 3, 2, 0.3 + 0.15 * static_cast<double>(i));
    const CheckReport r = check_contraction(m, random_policy(rng, 3, 2), 50, i);
    EXPECT_TRUE(r.passed) << r.worst_slack;
    EXPECT_EQ(r.trials, 50u);
  }
}

TEST(Checks, TamperedToleranceFails) {
  const FiniteMdp m = load_mdp(data_dir / "three_state.json");
  const CheckReport r = check_contraction(m, Policy::uniform(3, 2), 50, 2);
  ASSERT_TRUE(r.passed);
  const CheckReport tight = with_tolerance(r, 0.1 * r.worst_slack);
  EXPECT_FALSE(tight.passed);
  EXPECT_EQ(tight.check_name, r.check_name);
  EXPECT_TRUE(with_tolerance(tight, r.tolerance).passed);
}

TEST(Checks, MonotoneRecoveryFlagsGoodPairs) {
  std::vector<std::pair<AtomicDistribution, AtomicDistribution>> pairs = {
      {point_mass(0), point_mass(1)}, {point_mass(0), bernoulli(0.5)}};
  const auto reports = check_monotone_recovery(pairs, default_eps_list());
  ASSERT_EQ(reports.size(), 2u);
  for (const CheckReport &r : reports) {
    EXPECT_TRUE(r.passed) << r.check_name << " " << r.worst_slack;
  }
}

TEST(Suite, PassesOnBundledModels) {
  for (const char *name : {"single_state", "two_state_bernoulli", "three_state"}) {
    const FiniteMdp m = load_mdp(data_dir / (std::string(name) + ".json"));
    const auto reports =
        run_default_suite(name, m, Policy::uniform(m.n_states(), m.n_actions()), small_suite());
    EXPECT_TRUE(all_passed(reports)) << name;
    for (const CheckReport &r : reports) {
      EXPECT_TRUE(r.passed) << r.check_name << " slack " << r.worst_slack << " tol "
                            << r.tolerance << " " << r.detail;
      EXPECT_EQ(r.check_name.rfind(std::string(name) + "/", 0), 0u);
    }
    const bool has_analytic =
        std::any_of(reports.begin(), reports.end(), [](const CheckReport &r) {
          return r.check_name.ends_with("fixed_point_analytic");
        });
    EXPECT_EQ(has_analytic, std::string(name) == "single_state");
  }
}

TEST(Suite, ReportsAreReproducible) {
  const FiniteMdp m = load_mdp(data_dir / "two_state_bernoulli.json");
  const Policy pi = Policy::uniform(2, 1);
  const auto first = reports_to_json(without_runtime(run_default_suite("m", m, pi, small_suite())));
  const auto second = reports_to_json(without_runtime(run_default_suite("m", m, pi, small_suite())));
  EXPECT_EQ(first.dump(), second.dump());
}

TEST(Suite, AllPassedRequiresEveryRecord) {
  std::vector<CheckReport> reports(3);
  for (CheckReport &r : reports) {
    r.passed = true;
  }
  EXPECT_TRUE(all_passed(reports));
  reports[1].passed = false;
  EXPECT_FALSE(all_passed(reports));
}
