#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cramer/bellman.hpp"
#include "cramer/mdp.hpp"
#include "cramer/rng.hpp"
#include "cramer/spectral.hpp"

namespace cramer {

/// One named certification record. `worst_slack` is the measured quantity
/// compared against `tolerance`; passed iff worst_slack <= tolerance.
struct CheckReport {
  std::string check_name;
  std::size_t trials = 0;
  double worst_slack = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::uint64_t seed = 0;
  double runtime = 0.0;
  std::string detail;
};

/// Re-evaluates `passed` after a tolerance change.
CheckReport with_tolerance(CheckReport report, double tolerance);

// Random instances. Every draw comes from the supplied generator only.

/// 2 to `max_atoms` atoms uniform in `range`, Dirichlet-uniform weights.
AtomicDistribution random_distribution(SplitMix64 &rng, Interval range,
                                       std::size_t max_atoms = 6);
ReturnField random_field(SplitMix64 &rng, std::size_t n_states,
                         std::size_t n_actions, Interval range);
/// Dirichlet-uniform transition rows, reward laws with 1 to 3 atoms in
/// [-1, 1].
FiniteMdp random_mdp(SplitMix64 &rng, std::size_t n_states,
                     std::size_t n_actions, double gamma);
Policy random_policy(SplitMix64 &rng, std::size_t n_states,
                     std::size_t n_actions);

/// Largest |coefficient difference| over the union of locations; locations
/// present in one sum only count with their full coefficient.
double max_coefficient_gap(const SignedExpSum &lhs, const SignedExpSum &rhs);

CheckReport check_contraction(const FiniteMdp &mdp, const Policy &policy,
                              std::size_t trials, std::uint64_t seed);

/// Records: reward_translation, conditional_expectation, discount_scale.
std::vector<CheckReport> check_component_bounds(const FiniteMdp &mdp,
                                                const Policy &policy,
                                                std::size_t trials,
                                                std::uint64_t seed);

/// Records: isometry_norm (per epsilon in {1, 1e-2, 1e-4}),
/// transport_round_trip, transport_identity.
std::vector<CheckReport> check_isometry_and_transport(std::size_t trials,
                                                      std::uint64_t seed,
                                                      const QuadratureSpec &quad = {});

/// Records: intertwining_pointwise, intertwining_spectral,
/// intertwining_direct_spectral, and intertwining_primitives when rewards do
/// not depend on the successor state.
std::vector<CheckReport> check_intertwining(const FiniteMdp &mdp,
                                            const Policy &policy,
                                            std::size_t trials,
                                            std::uint64_t seed);

/// Records: monotone_recovery and recovery_rate.
std::vector<CheckReport> check_monotone_recovery(
    std::span<const std::pair<AtomicDistribution, AtomicDistribution>> pairs,
    std::span<const double> eps_list);

struct FixedPointOptions {
  /// Reduction used for the deep reference run. The lattice projection keeps
  /// the reduced operator a contraction, so its iterates settle to rounding.
  double reference_merge_delta = 1e-4;
  Reduction reference_reduction = Reduction::lattice;
  double reference_tol = 1e-14;
  std::size_t reference_max_iter = 400;
  /// Exact (unmerged) iterates enter the rate check while their largest
  /// entry stays below this many atoms.
  std::size_t exact_atom_limit = 20000;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 0;
};

/// Records: fixed_point_rate, fixed_point_means, fixed_point_monte_carlo,
/// fixed_point_spectral_invariance, plus fixed_point_analytic when every
/// reward is the same point mass.
std::vector<CheckReport> check_fixed_point(const FiniteMdp &mdp,
                                           const Policy &policy,
                                           const FixedPointOptions &options);

struct SuiteOptions {
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  std::size_t mc_samples = 100000;
  double reference_merge_delta = 1e-4;
  Reduction reference_reduction = Reduction::lattice;
};

/// Full suite on one model; record names are prefixed with `label`.
std::vector<CheckReport> run_default_suite(const std::string &label,
                                           const FiniteMdp &mdp,
                                           const Policy &policy,
                                           const SuiteOptions &options);

bool all_passed(std::span<const CheckReport> reports);

} // namespace cramer
