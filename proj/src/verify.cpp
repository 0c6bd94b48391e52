#include "cramer/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace cramer {

namespace {

std::string format_eps(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CheckReport make_report(std::string name, std::size_t trials, double slack,
                        double tolerance, std::uint64_t seed,
                        const Stopwatch &clock, std::string detail = {}) {
  CheckReport r;
  r.check_name = std::move(name);
  r.trials = trials;
  r.worst_slack = slack;
  r.tolerance = tolerance;
  r.passed = slack <= tolerance;
  r.seed = seed;
  r.runtime = clock.seconds();
  r.detail = std::move(detail);
  return r;
}

std::vector<double> dirichlet(SplitMix64 &rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double &x : w) {
    x = -std::log1p(-rng.uniform());
    // A zero draw would silently remove an atom.
    x = std::max(x, 1e-300);
    total += x;
  }
  for (double &x : w) {
    x /= total;
  }
  return w;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

BellmanConfig exact_config() {
  BellmanConfig c;
  c.merge_delta = 0.0;
  return c;
}

// Draws an unequal field pair on the return bound of `mdp`.
std::pair<ReturnField, ReturnField> random_field_pair(SplitMix64 &rng,
                                                      const FiniteMdp &mdp) {
  for (;;) {
    ReturnField f1 = random_field(rng, mdp.n_states(), mdp.n_actions(),
                                  mdp.return_bound());
    ReturnField f2 = random_field(rng, mdp.n_states(), mdp.n_actions(),
                                  mdp.return_bound());
    if (field_distance(f1, f2) > 0.0) {
      return {std::move(f1), std::move(f2)};
    }
  }
}

} // namespace

CheckReport with_tolerance(CheckReport report, double tolerance) {
  report.tolerance = tolerance;
  report.passed = report.worst_slack <= tolerance;
  return report;
}

AtomicDistribution random_distribution(SplitMix64 &rng, Interval range,
                                       std::size_t max_atoms) {
  if (max_atoms < 2) {
    throw std::invalid_argument("random_distribution: max_atoms must be >= 2");
  }
  const auto n = static_cast<std::size_t>(rng.integer(2, max_atoms));
  const std::vector<double> w = dirichlet(rng, n);
  std::vector<Atom> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    atoms[i] = {rng.uniform(range.lo, range.hi), w[i]};
  }
  return make_atomic(atoms);
}

ReturnField random_field(SplitMix64 &rng, std::size_t n_states,
                         std::size_t n_actions, Interval range) {
  std::vector<AtomicDistribution> entries;
  entries.reserve(n_states * n_actions);
  for (std::size_t i = 0; i < n_states * n_actions; ++i) {
    entries.push_back(random_distribution(rng, range));
  }
  return ReturnField(n_states, n_actions, std::move(entries));
}

FiniteMdp random_mdp(SplitMix64 &rng, std::size_t n_states,
                     std::size_t n_actions, double gamma) {
  Eigen::MatrixXd transition(static_cast<Eigen::Index>(n_states * n_actions),
                             static_cast<Eigen::Index>(n_states));
  for (Eigen::Index row = 0; row < transition.rows(); ++row) {
    const std::vector<double> w = dirichlet(rng, n_states);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < n_states; ++k) {
      transition(row, static_cast<Eigen::Index>(k)) = w[k];
      sum += w[k];
    }
    // Close the row so the sum is one to rounding.
    transition(row, static_cast<Eigen::Index>(n_states - 1)) = std::max(0.0, 1.0 - sum);
  }
  std::vector<AtomicDistribution> rewards;
  rewards.reserve(n_states * n_actions * n_states);
  for (std::size_t i = 0; i < n_states * n_actions * n_states; ++i) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 3));
    const std::vector<double> w = dirichlet(rng, n);
    std::vector<Atom> atoms(n);
    for (std::size_t k = 0; k < n; ++k) {
      atoms[k] = {rng.uniform(-1.0, 1.0), w[k]};
    }
    rewards.push_back(make_atomic(atoms));
  }
  return FiniteMdp::create(n_states, n_actions, gamma, std::move(transition),
                           std::move(rewards));
}

Policy random_policy(SplitMix64 &rng, std::size_t n_states,
                     std::size_t n_actions) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(n_states),
                    static_cast<Eigen::Index>(n_actions));
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    const std::vector<double> w = dirichlet(rng, n_actions);
    double sum = 0.0;
    for (std::size_t a = 0; a + 1 < n_actions; ++a) {
      p(s, static_cast<Eigen::Index>(a)) = w[a];
      sum += w[a];
    }
    p(s, static_cast<Eigen::Index>(n_actions - 1)) = std::max(0.0, 1.0 - sum);
  }
  return Policy::create(std::move(p));
}

double max_coefficient_gap(const SignedExpSum &lhs, const SignedExpSum &rhs) {
  std::map<double, double> diff;
  for (const ExpTerm &t : lhs.terms()) {
    diff[t.location] += t.coefficient;
  }
  for (const ExpTerm &t : rhs.terms()) {
    diff[t.location] -= t.coefficient;
  }
  double gap = 0.0;
  for (const auto &[x, c] : diff) {
    gap = std::max(gap, std::abs(c));
  }
  return gap;
}

CheckReport check_contraction(const FiniteMdp &mdp, const Policy &policy,
                              std::size_t trials, std::uint64_t seed) {
  const Stopwatch clock;
  const BellmanConfig config = exact_config();
  double worst = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, i);
    const auto [f1, f2] = random_field_pair(rng, mdp);
    const double before = field_distance(f1, f2);
    const double after = field_distance(bellman_apply(f1, mdp, policy, config),
                                        bellman_apply(f2, mdp, policy, config));
    worst = std::max(worst, after / before);
  }
  return make_report("contraction", trials, worst,
                     std::sqrt(mdp.gamma()) + 1e-9, seed, clock);
}

std::vector<CheckReport> check_component_bounds(const FiniteMdp &mdp,
                                                const Policy &policy,
                                                std::size_t trials,
                                                std::uint64_t seed) {
  const Stopwatch clock;
  const Eigen::MatrixXd kernel = policy_kernel(mdp, policy);
  const double root = std::sqrt(mdp.gamma());
  double worst_reward = 0.0;
  double worst_expectation = 0.0;
  double worst_discount = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, i);
    const auto [f1, f2] = random_field_pair(rng, mdp);
    const double before = field_distance(f1, f2);
    worst_reward = std::max(
        worst_reward, field_distance(apply_reward_translation(f1, mdp),
                                     apply_reward_translation(f2, mdp)) / before);
    worst_expectation = std::max(
        worst_expectation,
        field_distance(apply_conditional_expectation(f1, kernel),
                       apply_conditional_expectation(f2, kernel)) / before);
    // D_gamma acts entrywise, so the equality holds for each entry.
    for (std::size_t k = 0; k < f1.size(); ++k) {
      const double d = cramer_distance(f1[k], f2[k]);
      if (d == 0.0) {
        continue;
      }
      const double scaled =
          cramer_distance(affine_pushforward(f1[k], mdp.gamma(), 0.0),
                          affine_pushforward(f2[k], mdp.gamma(), 0.0));
      worst_discount = std::max(worst_discount, std::abs(scaled / d - root));
    }
  }
  return {
      make_report("reward_translation", trials, worst_reward, 1.0 + 1e-12, seed, clock),
      make_report("conditional_expectation", trials, worst_expectation, 1.0 + 1e-12,
                  seed, clock),
      make_report("discount_scale", trials, worst_discount, 1e-12, seed, clock,
                  "measured |ratio - sqrt(gamma)|"),
  };
}

std::vector<CheckReport> check_isometry_and_transport(std::size_t trials,
                                                      std::uint64_t seed,
                                                      const QuadratureSpec &quad) {
  std::vector<CheckReport> out;
  const Interval range{0.0, 1.0};
  for (double eps : {1.0, 1e-2, 1e-4}) {
    const Stopwatch clock;
    const EpsGeometry geom(eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      SplitMix64 rng = SplitMix64::stream(seed, i);
      const AtomicDistribution p1 = random_distribution(rng, range);
      const AtomicDistribution p2 = random_distribution(rng, range);
      const CdfDifference h = cdf_difference(p1, p2);
      const double closed = h_eps_norm(transport_U(h), geom);
      const double numeric = hcdf_norm_quadrature(h, geom, quad).value;
      worst = std::max(worst, relative_gap(closed, numeric));
    }
    out.push_back(make_report("isometry_norm_eps_" + format_eps(eps), trials,
                              worst, 1e-6, seed, clock,
                              "relative gap of closed-form and quadrature norms"));
  }

  const Stopwatch clock;
  double round_trip = 0.0;
  double identity = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, i);
    const AtomicDistribution p1 = random_distribution(rng, range);
    const AtomicDistribution p2 = random_distribution(rng, range);
    const CdfDifference h = cdf_difference(p1, p2);
    if (!(transport_U_inv(transport_U(h)) == h)) {
      round_trip = std::max(round_trip, 1.0);
    }
    identity = std::max(identity, max_coefficient_gap(
                                      transport_U(h),
                                      spectral_embed(p1) - spectral_embed(p2)));
  }
  out.push_back(make_report("transport_round_trip", trials, round_trip, 0.0, seed,
                            clock, "1 if any round trip differs"));
  out.push_back(make_report("transport_identity", trials, identity, 1e-15, seed,
                            clock, "max coefficient gap of U(F1-F2) and Phi(P1)-Phi(P2)"));
  return out;
}

std::vector<CheckReport> check_intertwining(const FiniteMdp &mdp,
                                            const Policy &policy,
                                            std::size_t trials,
                                            std::uint64_t seed) {
  const Stopwatch clock;
  const BellmanConfig config = exact_config();
  const bool primitives = rewards_independent_of_successor(mdp);
  double pointwise = 0.0;
  double spectral = 0.0;
  double direct = 0.0;
  double composed = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    SplitMix64 rng = SplitMix64::stream(seed, i);
    const ReturnField f =
        random_field(rng, mdp.n_states(), mdp.n_actions(), mdp.return_bound());
    const ReturnField image = bellman_apply(f, mdp, policy, config);
    const Interval hull = support_hull(image);
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        for (int k = 0; k < 64; ++k) {
          const double x = rng.uniform(hull.lo - 0.1, hull.hi + 0.1);
          pointwise = std::max(
              pointwise, std::abs(cdf_eval(image(s, a), x) -
                                  bellman_cdf_pointwise(f, mdp, policy, s, a, x)));
        }
      }
    }
    const SpectralField lifted = lift_V(f);
    const SpectralField via_cdf = lift_V(image);
    const SpectralField via_spec = spectral_bellman_apply(lifted, mdp, policy, config);
    spectral = std::max(spectral, induced_field_distance(via_cdf, via_spec));
    const SpectralField via_direct = spectral_bellman_apply_direct(lifted, mdp, policy);
    for (std::size_t k = 0; k < via_cdf.size(); ++k) {
      direct = std::max(direct, max_coefficient_gap(via_cdf[k], via_direct[k]));
    }
    if (primitives) {
      composed = std::max(
          composed, field_distance(image, bellman_apply_by_primitives(f, mdp, policy)));
    }
  }
  std::vector<CheckReport> out{
      make_report("intertwining_pointwise", trials, pointwise, 1e-12, seed, clock,
                  "max CDF gap of the law-level update and the pointwise form"),
      make_report("intertwining_spectral", trials, spectral, 1e-12, seed, clock,
                  "induced distance between the two diagram paths"),
      make_report("intertwining_direct_spectral", trials, direct, 1e-12, seed, clock,
                  "max coefficient gap against the direct spectral update"),
  };
  if (primitives) {
    out.push_back(make_report("intertwining_primitives", trials, composed, 1e-12,
                              seed, clock,
                              "distance of the update to S_R o C o D_gamma"));
  }
  return out;
}

std::vector<CheckReport> check_monotone_recovery(
    std::span<const std::pair<AtomicDistribution, AtomicDistribution>> pairs,
    std::span<const double> eps_list) {
  const Stopwatch clock;
  if (eps_list.empty()) {
    throw std::invalid_argument("check_monotone_recovery: empty epsilon list");
  }
  double violation = 0.0;
  double rate = 0.0;
  std::size_t rate_trials = 0;
  const double eps_min = eps_list.back();
  for (const auto &[p1, p2] : pairs) {
    const std::vector<SweepRow> rows = eps_sweep(p1, p2, eps_list);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      violation = std::max(violation, rows[i].reg_distance - rows[i].cdf_side_distance);
      if (i > 0) {
        violation = std::max(violation, rows[i - 1].reg_distance - rows[i].reg_distance);
      }
    }
    // d_C^2 - d_eps^2 ~ (sqrt(eps) / 2) (mean gap)^2, so the squared gap
    // halves when epsilon quarters. Pairs with equal means have a higher
    // order expansion and are skipped.
    const double dmean = p1.mean() - p2.mean();
    if (std::abs(dmean) < 1e-3) {
      continue;
    }
    const double exact = cramer_distance(p1, p2);
    const double fine = reg_distance(p1, p2, EpsGeometry(eps_min));
    const double coarse = reg_distance(p1, p2, EpsGeometry(4.0 * eps_min));
    const double ratio =
        (exact * exact - coarse * coarse) / (exact * exact - fine * fine);
    rate = std::max(rate, std::max(ratio / 2.0, 2.0 / ratio) - 1.0);
    ++rate_trials;
  }
  return {
      make_report("monotone_recovery", pairs.size(), violation, 1e-12, 0, clock,
                  "largest decrease along the sweep or excess over d_C"),
      make_report("recovery_rate", rate_trials, rate, 0.2, 0, clock,
                  "squared-gap ratio between 4*eps_min and eps_min, relative to 2"),
  };
}

std::vector<CheckReport> check_fixed_point(const FiniteMdp &mdp,
                                           const Policy &policy,
                                           const FixedPointOptions &options) {
  std::vector<CheckReport> out;
  const double gamma = mdp.gamma();
  const double root = std::sqrt(gamma);
  const BellmanConfig exact = exact_config();

  BellmanConfig reference_config;
  reference_config.merge_delta = options.reference_merge_delta;
  reference_config.reduction = options.reference_reduction;
  reference_config.stop_tol = options.reference_tol;
  reference_config.max_iter = options.reference_max_iter;

  const Stopwatch reference_clock;
  const Evaluation<ReturnField> reference =
      evaluate_policy(mdp, policy, reference_config, zero_field(mdp));
  const ReturnField &fixed = reference.field;
  // A-posteriori distance of the reference to the exact fixed point.
  const double residual =
      field_distance(fixed, bellman_apply(fixed, mdp, policy, exact));
  const double reference_error = residual / (1.0 - root);
  const std::string reference_note =
      "reference iterations " + std::to_string(reference.trace.size()) +
      ", certified reference error " + std::to_string(reference_error);

  {
    // Rate: exact iterates from delta_0 against the reference, with the
    // reference error carried on both sides of the bound.
    const Stopwatch clock;
    ReturnField iterate = zero_field(mdp);
    const double initial = field_distance(iterate, fixed);
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    while (n < 200) {
      ReturnField next = bellman_apply(iterate, mdp, policy, exact);
      if (max_atom_count(next) > options.exact_atom_limit) {
        break;
      }
      iterate = std::move(next);
      ++n;
      const double bound =
          std::pow(root, static_cast<double>(n)) * (initial + reference_error) +
          reference_error;
      worst = std::max(worst, field_distance(iterate, fixed) - bound);
    }
    if (n == 0) {
      worst = 0.0;
    }
    out.push_back(make_report("fixed_point_rate", n, worst, 1e-12, options.seed,
                              clock, reference_note));
  }

  {
    const Stopwatch clock;
    const Eigen::MatrixXd q = classical_q_values(mdp, policy);
    double worst = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        worst = std::max(worst, std::abs(fixed(s, a).mean() -
                                         q(static_cast<Eigen::Index>(s),
                                           static_cast<Eigen::Index>(a))));
      }
    }
    out.push_back(make_report("fixed_point_means", fixed.size(), worst, 1e-6,
                              options.seed, clock));
  }

  if (options.mc_samples > 0) {
    const Stopwatch clock;
    const std::size_t horizon = rollout_horizon(mdp);
    double worst = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        const AtomicDistribution empirical = monte_carlo_returns(
            mdp, policy, s, a, horizon, options.mc_samples,
            options.seed + fixed.index(s, a));
        worst = std::max(worst, cramer_distance(fixed(s, a), empirical));
      }
    }
    const double width = support_hull(fixed).width();
    // Rollouts stop after `horizon` steps, shifting each sample by at most b;
    // d_Cr^2 <= W_1 <= b for such a coupling.
    const double truncation = std::pow(mdp.gamma(), static_cast<double>(horizon)) *
                              mdp.return_bound().hi;
    const double tolerance =
        3.0 * width / std::sqrt(static_cast<double>(options.mc_samples)) +
        std::sqrt(truncation) + reference_error + 1e-9;
    out.push_back(make_report(
        "fixed_point_monte_carlo", options.mc_samples, worst, tolerance, options.seed, clock,
        "bound 3 * (support width) / sqrt(n) plus truncation and reference error"));
  }

  {
    const Stopwatch clock;
    const SpectralField lifted = lift_V(fixed);
    const SpectralField image =
        spectral_bellman_apply(lifted, mdp, policy, reference_config);
    const double moved = induced_field_distance(lifted, image);
    out.push_back(make_report(
        "fixed_point_spectral_invariance", 1, moved, 1e-12, options.seed, clock,
        "operator as configured (" + to_string(options.reference_reduction) + " " +
            std::to_string(options.reference_merge_delta) +
            "); exact-operator residual " + std::to_string(residual)));
  }

  // When every reward is the same point mass c, the fixed point is
  // delta_{c / (1 - gamma)} everywhere.
  std::optional<double> constant;
  bool deterministic = true;
  for (std::size_t s = 0; s < mdp.n_states() && deterministic; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions() && deterministic; ++a) {
      for (std::size_t next = 0; next < mdp.n_states(); ++next) {
        const AtomicDistribution &r = mdp.reward(s, a, next);
        if (r.size() != 1 || (constant && *constant != r.min_location())) {
          deterministic = false;
          break;
        }
        constant = r.min_location();
      }
    }
  }
  if (deterministic && constant) {
    const Stopwatch clock;
    const AtomicDistribution expected = point_mass(*constant / (1.0 - gamma));
    double worst = 0.0;
    for (const auto &d : fixed.entries()) {
      worst = std::max(worst, cramer_distance(d, expected));
    }
    out.push_back(make_report("fixed_point_analytic", fixed.size(), worst, 1e-12,
                              options.seed, clock));
  }
  // The rate record also carries the cost of the reference run.
  out.front().runtime = reference_clock.seconds();
  return out;
}

std::vector<CheckReport> run_default_suite(const std::string &label,
                                           const FiniteMdp &mdp,
                                           const Policy &policy,
                                           const SuiteOptions &options) {
  std::vector<CheckReport> all;
  const auto append = [&all, &label](std::vector<CheckReport> reports) {
    for (CheckReport &r : reports) {
      r.check_name = label + "/" + r.check_name;
      all.push_back(std::move(r));
    }
  };
  append({check_contraction(mdp, policy, options.trials, options.seed)});
  append(check_component_bounds(mdp, policy, options.trials, options.seed + 1));
  append(check_intertwining(mdp, policy, std::min<std::size_t>(options.trials, 50),
                            options.seed + 2));

  std::vector<std::pair<AtomicDistribution, AtomicDistribution>> pairs;
  pairs.emplace_back(point_mass(0.0), point_mass(1.0));
  pairs.emplace_back(point_mass(0.0), bernoulli(0.5));
  pairs.emplace_back(bernoulli(0.3), bernoulli(0.3));
  for (std::size_t i = 0; i < options.trials; ++i) {
    SplitMix64 rng = SplitMix64::stream(options.seed + 3, i);
    AtomicDistribution p1 = random_distribution(rng, {-1.0, 1.0});
    AtomicDistribution p2 = random_distribution(rng, {-1.0, 1.0});
    pairs.emplace_back(std::move(p1), std::move(p2));
  }
  const std::vector<double> eps = default_eps_list();
  append(check_monotone_recovery(pairs, eps));
  append(check_isometry_and_transport(std::min<std::size_t>(options.trials, 20),
                                      options.seed + 4));

  FixedPointOptions fp;
  fp.reference_merge_delta = options.reference_merge_delta;
  fp.reference_reduction = options.reference_reduction;
  fp.mc_samples = options.mc_samples;
  fp.seed = options.seed + 5;
  append(check_fixed_point(mdp, policy, fp));
  return all;
}

bool all_passed(std::span<const CheckReport> reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const CheckReport &r) { return r.passed; });
}

} // namespace cramer
