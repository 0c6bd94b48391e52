#include <gtest/gtest.h>

#include <cmath>

#include "cramer/bellman.hpp"
#include "cramer/verify.hpp"
#include "oracles.hpp"

using namespace cramer;

namespace {

FiniteMdp single_state(const AtomicDistribution &reward, double gamma = 0.5) {
  Eigen::MatrixXd p(1, 1);
  p << 1.0;
  return FiniteMdp::create(1, 1, gamma, p, {reward});
}

ReturnField constant_field(const FiniteMdp &m, const AtomicDistribution &d) {
  return ReturnField::filled(m.n_states(), m.n_actions(), d);
}

BellmanConfig exact() { return BellmanConfig{}; }

} // namespace

TEST(RewardTranslation, Examples) {
  const FiniteMdp one = single_state(point_mass(1.0));
  EXPECT_EQ(apply_reward_translation(constant_field(one, point_mass(0)), one)[0], point_mass(1.0));
  const FiniteMdp bern = single_state(bernoulli(0.5));
  EXPECT_EQ(apply_reward_translation(constant_field(bern, point_mass(0)), bern)[0], bernoulli(0.5));
  EXPECT_EQ(apply_reward_translation(constant_field(one, bernoulli(0.5)), one)[0],
            bernoulli(0.5, 1.0, 2.0));
}

TEST(DiscountScale, Examples) {
  const FiniteMdp one = single_state(point_mass(1.0));
  EXPECT_EQ(apply_discount_scale(constant_field(one, point_mass(1)), 0.5)[0], point_mass(0.5));
  EXPECT_EQ(apply_discount_scale(constant_field(one, point_mass(0)), 0.3)[0], point_mass(0.0));
}

TEST(ConditionalExpectation, Examples) {
  std::vector<AtomicDistribution> e{point_mass(0.0), point_mass(1.0)};
  const ReturnField f(2, 1, e);
  Eigen::MatrixXd route(2, 2);
  route << 0, 1, 0, 1;
  EXPECT_EQ(apply_conditional_expectation(f, route)[0], point_mass(1.0));
  Eigen::MatrixXd half(2, 2);
  half << 0.5, 0.5, 0.5, 0.5;
  EXPECT_EQ(apply_conditional_expectation(f, half)[1], bernoulli(0.5));
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(apply_conditional_expectation(f, bad), std::invalid_argument);
}

TEST(BellmanApply, LawLevelUpdateOnPointMasses) {
  const FiniteMdp m = single_state(point_mass(1.0));
  const Policy pi = Policy::uniform(1, 1);
  // R + gamma Z' with Z' = 0 gives delta_1, not gamma (0 + 1).
  EXPECT_EQ(bellman_apply(constant_field(m, point_mass(0)), m, pi, exact())[0], point_mass(1.0));
  EXPECT_EQ(bellman_apply(constant_field(m, point_mass(2)), m, pi, exact())[0], point_mass(2.0));
}

TEST(BellmanApply, MatchesEnumerationOracle) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    SplitMix64 rng = SplitMix64::stream(31, i);
    const FiniteMdp m = random_mdp(rng, 3, 2, rng.uniform(0.1, 0.95));
    const Policy pi = random_policy(rng, 3, 2);
    const ReturnField f = random_field(rng, 3, 2, m.return_bound());
    const ReturnField t = bellman_apply(f, m, pi, exact());
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t a = 0; a < 2; ++a) {
        const auto law = oracle::bellman_entry(f, m, pi, s, a);
        const auto atoms = t(s, a).atoms();
        ASSERT_EQ(atoms.size(), law.size());
        std::size_t k = 0;
        for (const auto &[x, w] : law) {
          EXPECT_EQ(atoms[k].location, x);
          EXPECT_NEAR(atoms[k].weight, w, 1e-15);
          ++k;
        }
      }
    }
  }
}

TEST(BellmanApply, PointwiseCdfFormAt64Points) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    SplitMix64 rng = SplitMix64::stream(32, i);
    const FiniteMdp m = random_mdp(rng, 2, 2, rng.uniform(0.1, 0.95));
    const Policy pi = random_policy(rng, 2, 2);
    const ReturnField f = random_field(rng, 2, 2, m.return_bound());
    const ReturnField t = bellman_apply(f, m, pi, exact());
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t a = 0; a < 2; ++a) {
        for (int k = 0; k < 64; ++k) {
          const double x = rng.uniform(m.return_bound().lo, m.return_bound().hi);
          EXPECT_NEAR(cdf_eval(t(s, a), x), bellman_cdf_pointwise(f, m, pi, s, a, x), 1e-12);
        }
      }
    }
  }
}

TEST(BellmanApply, PrimitiveCompositionWhenRewardsIgnoreSuccessor) {
  Eigen::MatrixXd p(4, 2);
  p << 0.3, 0.7, 0.5, 0.5, 1.0, 0.0, 0.2, 0.8;
  const AtomicDistribution r0 = bernoulli(0.4, -1.0, 1.0);
  const AtomicDistribution r1 = make_atomic({{0.2, 0.3}, {0.5, 0.7}});
  const AtomicDistribution r2 = point_mass(-0.25);
  const AtomicDistribution r3 = bernoulli(0.9);
  const FiniteMdp m = FiniteMdp::create(2, 2, 0.7, p, {r0, r0, r1, r1, r2, r2, r3, r3});
  ASSERT_TRUE(rewards_independent_of_successor(m));
  const Policy pi = Policy::uniform(2, 2);
  for (std::uint64_t i = 0; i < 100; ++i) {
    SplitMix64 rng = SplitMix64::stream(33, i);
    const ReturnField f = random_field(rng, 2, 2, m.return_bound());
    EXPECT_LE(field_distance(bellman_apply(f, m, pi, exact()),
                             bellman_apply_by_primitives(f, m, pi)),
              1e-12);
  }
}

TEST(BellmanApply, ContractionAndInvariance) {
  for (double gamma : {0.3, 0.5, 0.9}) {
    for (std::uint64_t i = 0; i < 300; ++i) {
      SplitMix64 rng = SplitMix64::stream(34, i);
      const FiniteMdp m = random_mdp(rng, 3, 2, gamma);
      const Policy pi = random_policy(rng, 3, 2);
      const ReturnField f1 = random_field(rng, 3, 2, m.return_bound());
      const ReturnField f2 = random_field(rng, 3, 2, m.return_bound());
      const ReturnField t1 = bellman_apply(f1, m, pi, exact());
      const ReturnField t2 = bellman_apply(f2, m, pi, exact());
      EXPECT_LE(field_distance(t1, t2), (std::sqrt(gamma) + 1e-9) * field_distance(f1, f2));
      const Interval hull = support_hull(t1);
      EXPECT_TRUE(m.return_bound().contains(hull.lo, 1e-12));
      EXPECT_TRUE(m.return_bound().contains(hull.hi, 1e-12));
      for (const auto &d : t1.entries()) {
        double mass = 0.0;
        for (const Atom &a : d.atoms()) {
          EXPECT_GT(a.weight, 0.0);
          mass += a.weight;
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
      }
    }
  }
}

TEST(BellmanApply, RejectsFieldsOutsideTheReturnBound) {
  const FiniteMdp m = single_state(point_mass(1.0));
  EXPECT_THROW(bellman_apply(constant_field(m, point_mass(10.0)), m, Policy::uniform(1, 1), exact()),
               std::domain_error);
}

TEST(FieldDistance, Examples) {
  const FiniteMdp m = single_state(point_mass(1.0));
  const ReturnField f = constant_field(m, bernoulli(0.2));
  EXPECT_EQ(field_distance(f, f), 0.0);
  std::vector<AtomicDistribution> a(4, point_mass(0.0));
  std::vector<AtomicDistribution> b = a;
  b[2] = point_mass(1.0);
  EXPECT_EQ(field_distance(ReturnField(2, 2, a), ReturnField(2, 2, b)), 1.0);
}

TEST(EvaluatePolicy, SingleStateFixedPoint) {
  const FiniteMdp m = single_state(point_mass(1.0));
  BellmanConfig c;
  c.stop_tol = 1e-13;
  const auto result = evaluate_policy(m, Policy::uniform(1, 1), c, zero_field(m));
  ASSERT_TRUE(result.converged);
  EXPECT_LE(cramer_distance(result.field[0], point_mass(2.0)), 1e-12);
  EXPECT_NEAR(result.field[0].mean(), 2.0, 1e-12);
  for (std::size_t n = 0; n < result.trace.size(); ++n) {
    EXPECT_EQ(result.trace[n].iteration, n + 1);
    EXPECT_EQ(result.trace[n].atom_count_max, 1u);
  }
}

TEST(EvaluatePolicy, ZeroRewardReachesDeltaZeroFromAnyStart) {
  Eigen::MatrixXd p(1, 1);
  p << 1.0;
  // Declared reward bound 1 so that nonzero starting fields are admissible.
  const FiniteMdp m = FiniteMdp::create(1, 1, 0.5, p, {point_mass(0.0)}, 1.0);
  for (std::uint64_t i = 0; i < 20; ++i) {
    SplitMix64 rng = SplitMix64::stream(43, i);
    const ReturnField start = random_field(rng, 1, 1, m.return_bound());
    const auto result = evaluate_policy(m, Policy::uniform(1, 1), exact(), start);
    ASSERT_TRUE(result.converged);
    EXPECT_LE(cramer_distance(result.field[0], point_mass(0.0)), result.certified_error + 1e-15);
    EXPECT_LE(result.certified_error, 1e-8);
  }
}

TEST(EvaluatePolicy, BanachBoundIsCertified) {
  SplitMix64 rng(41);
  const FiniteMdp m = random_mdp(rng, 2, 2, 0.3);
  const Policy pi = random_policy(rng, 2, 2);
  BellmanConfig c;
  c.merge_delta = 1e-4;
  c.reduction = Reduction::lattice;
  c.stop_tol = 1e-10;
  const auto result = evaluate_policy(m, pi, c, zero_field(m));
  ASSERT_TRUE(result.converged);
  // Reference: a much deeper, finer run.
  BellmanConfig fine = c;
  fine.merge_delta = 1e-5;
  fine.stop_tol = 1e-12;
  const auto reference = evaluate_policy(m, pi, fine, zero_field(m));
  EXPECT_LE(field_distance(result.field, reference.field),
            result.certified_error + reference.certified_error + 1e-12);
  const Eigen::MatrixXd q = classical_q_values(m, pi);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a)
      EXPECT_NEAR(result.field(s, a).mean(), q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)), 1e-8);
}

TEST(EvaluatePolicy, MaxIterStopsWithoutConvergence) {
  SplitMix64 rng(42);
  const FiniteMdp m = random_mdp(rng, 2, 2, 0.9);
  BellmanConfig c;
  c.max_iter = 1;
  const auto result = evaluate_policy(m, Policy::uniform(2, 2), c, zero_field(m));
  EXPECT_FALSE(result.converged);
  EXPECT_EQ(result.trace.size(), 1u);
}

TEST(Config, Validation) {
  BellmanConfig c;
  c.merge_delta = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = BellmanConfig{};
  c.backend = Backend::grid;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_backend("grid"), Backend::grid);
  EXPECT_THROW(parse_backend("spline"), std::invalid_argument);
  EXPECT_EQ(parse_reduction("lattice"), Reduction::lattice);
  EXPECT_THROW(parse_reduction("other"), std::invalid_argument);
}

TEST(GridBackend, SingleStateConverges) {
  const FiniteMdp m = single_state(point_mass(1.0));
  BellmanConfig c;
  c.backend = Backend::grid;
  c.grid = GridSpec::spanning(m.return_bound(), 401);
  c.stop_tol = 1e-10;
  const auto result = evaluate_policy(m, Policy::uniform(1, 1), c, zero_grid_field(m, *c.grid));
  ASSERT_TRUE(result.converged);
  EXPECT_LE(cramer_distance(result.field[0], point_mass(2.0)), 1e-10);
}

TEST(GridBackend, TracksAtomicFixedPoint) {
  Eigen::MatrixXd p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  const FiniteMdp m = FiniteMdp::create(2, 1, 0.5, p,
                                        {bernoulli(0.5), bernoulli(0.5), bernoulli(0.2), bernoulli(0.2)});
  const Policy pi = Policy::uniform(2, 1);
  BellmanConfig atomic;
  atomic.merge_delta = 1e-5;
  atomic.reduction = Reduction::lattice;
  atomic.stop_tol = 1e-10;
  const auto exact_result = evaluate_policy(m, pi, atomic, zero_field(m));
  double previous = INFINITY;
  for (std::size_t n : {201, 801, 3201}) {
    BellmanConfig c;
    c.backend = Backend::grid;
    c.grid = GridSpec::spanning(m.return_bound(), n);
    c.stop_tol = 1e-10;
    const auto g = evaluate_policy(m, pi, c, zero_grid_field(m, *c.grid));
    ASSERT_TRUE(g.converged);
    double err = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      err = std::max(err, cramer_distance(exact_result.field[i], g.field[i]));
      const auto values = g.field[i].values();
      EXPECT_TRUE(std::is_sorted(values.begin(), values.end()));
      EXPECT_EQ(values.back(), 1.0);
    }
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 0.02);
}
