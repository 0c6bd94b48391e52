// Acceptance suite: one PASS/FAIL line per criterion, tolerances and runtime
// limits pinned below. Exit status is 0 iff every line passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cramer/io.hpp"
#include "cramer/verify.hpp"
#include "oracles.hpp"

using namespace cramer;

namespace {

const std::filesystem::path data_dir = CRAMER_DATA_DIR;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  double measured;
  double tolerance;
  std::string detail;
};

struct Criterion {
  int id;
  const char *name;
  double runtime_limit;
  std::function<Outcome()> body;
};

constexpr double kGammas[] = {0.3, 0.5, 0.9};

Outcome discount_equality() {
  double worst = 0.0;
  std::size_t pairs = 0;
  for (double gamma : kGammas) {
    for (std::uint64_t i = 0; i < 1000; ++i) {
      SplitMix64 rng = SplitMix64::stream(kSeed + 1, i);
      const ReturnField f1 = random_field(rng, 3, 2, {-5.0, 5.0});
      const ReturnField f2 = random_field(rng, 3, 2, {-5.0, 5.0});
      const double lhs = field_distance(apply_discount_scale(f1, gamma),
                                        apply_discount_scale(f2, gamma));
      worst = std::max(worst, std::abs(lhs - std::sqrt(gamma) * field_distance(f1, f2)));
      ++pairs;
    }
  }
  return {worst, 1e-10, std::to_string(pairs) + " pairs"};
}

Outcome contraction() {
  double worst = 0.0;
  std::string detail;
  for (double gamma : kGammas) {
    SplitMix64 rng = SplitMix64::stream(kSeed + 2, static_cast<std::uint64_t>(gamma * 10));
    const FiniteMdp m = random_mdp(rng, 3, 2, gamma);
    const CheckReport r = check_contraction(m, random_policy(rng, 3, 2), 1000, kSeed);
    // worst_slack is the largest ratio; compare the excess over sqrt(gamma).
    worst = std::max(worst, r.worst_slack - std::sqrt(gamma));
    detail += "gamma " + std::to_string(gamma).substr(0, 3) + " ratio " +
              std::to_string(r.worst_slack) + "; ";
  }
  return {worst, 1e-9, detail + "1000 pairs per gamma, merge_delta 0"};
}

Outcome dual_oracles() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    SplitMix64 rng = SplitMix64::stream(kSeed + 3, i);
    const auto p = random_distribution(rng, {-10.0, 10.0}, 12);
    const auto q = random_distribution(rng, {-10.0, 10.0}, 12);
    worst = std::max(worst, oracle::relative(cramer_distance(p, q),
                                             cramer_distance_energy_form(p, q)));
  }
  return {worst, 1e-10, "10000 pairs, relative"};
}

Outcome spectral_formula() {
  // Measured: largest |estimate - exact| in excess of the reported budget,
  // together with the largest budgets at both settings.
  double excess = -INFINITY;
  double budget_default = 0.0;
  double budget_fine = 0.0;
  QuadratureSpec fine;
  fine.omega_max = 1e6;
  for (std::uint64_t i = 0; i < 100; ++i) {
    SplitMix64 rng = SplitMix64::stream(kSeed + 4, i);
    const auto p = random_distribution(rng, {-0.5, 0.5});
    const auto q = random_distribution(rng, {-0.5, 0.5});
    const double exact = cramer_distance(p, q);
    const auto coarse = cramer_via_spectrum(p, q);
    const auto precise = cramer_via_spectrum(p, q, fine);
    excess = std::max({excess, std::abs(coarse.value - exact) - coarse.distance_budget,
                       std::abs(precise.value - exact) - precise.distance_budget});
    budget_default = std::max(budget_default, coarse.distance_budget);
    budget_fine = std::max(budget_fine, precise.distance_budget);
  }
  const bool budgets_ok = budget_default <= 1e-3 && budget_fine <= 1e-6;
  char detail[160];
  std::snprintf(detail, sizeof detail, "budget %.2e at defaults, %.2e at omega_max 1e6%s",
                budget_default, budget_fine, budgets_ok ? "" : " (budget limit exceeded)");
  return {budgets_ok ? std::max(excess, 0.0) : INFINITY, 0.0, detail};
}

Outcome closed_form_vs_quadrature() {
  double worst = 0.0;
  for (double eps : {1.0, 1e-2, 1e-4}) {
    const EpsGeometry g(eps);
    for (std::uint64_t i = 0; i < 100; ++i) {
      SplitMix64 rng = SplitMix64::stream(kSeed + 5, i);
      const auto p = random_distribution(rng, {-1.0, 1.0});
      const auto q = random_distribution(rng, {-1.0, 1.0});
      worst = std::max(worst, oracle::relative(reg_distance(p, q, g),
                                               reg_distance_quadrature(p, q, g).value));
    }
  }
  return {worst, 1e-6, "100 pairs per epsilon, relative"};
}

Outcome monotone_recovery() {
  const auto rows = eps_sweep(point_mass(0.0), point_mass(1.0), default_eps_list());
  double worst = 0.0;
  bool shape_ok = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double s = std::sqrt(rows[k].epsilon);
    const double expected_gap = 1.0 - std::sqrt(-std::expm1(-s) / s);
    worst = std::max(worst, std::abs(std::abs(1.0 - rows[k].reg_distance) - expected_gap));
    shape_ok = shape_ok && rows[k].reg_distance <= 1.0 &&
               (k == 0 || rows[k].reg_distance >= rows[k - 1].reg_distance);
  }
  return {shape_ok ? worst : INFINITY, 1e-9,
          std::to_string(rows.size()) + " epsilons, final value " +
              std::to_string(rows.back().reg_distance)};
}

Outcome fourier_of_difference_agreement() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    SplitMix64 rng = SplitMix64::stream(kSeed + 7, i);
    const auto p = random_distribution(rng, {-2.0, 2.0});
    const auto q = random_distribution(rng, {-2.0, 2.0});
    for (int k = 0; k < 32; ++k) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double w = sign * std::exp(rng.uniform(std::log(1e-3), std::log(1e2)));
      const auto formula = cdf_diff_fourier(p, q, w);
      const auto direct = oracle::fourier_of_difference(p, q, w);
      worst = std::max(worst, std::abs(formula - direct) / std::abs(direct));
    }
  }
  return {worst, 1e-6, "3200 frequencies, relative"};
}

Outcome isometry() {
  double worst = 0.0;
  std::string names;
  for (const CheckReport &r : check_isometry_and_transport(100, kSeed)) {
    if (r.check_name.starts_with("isometry_norm")) {
      worst = std::max(worst, r.worst_slack);
      names += r.check_name.substr(std::string("isometry_norm_").size()) + " ";
    } else if (!r.passed) {
      return {INFINITY, 1e-6, r.check_name + " failed"};
    }
  }
  return {worst, 1e-6, "100 differences at " + names + "relative"};
}

Outcome intertwining() {
  const FiniteMdp m = load_mdp(data_dir / "three_state.json");
  double worst = 0.0;
  for (const CheckReport &r : check_intertwining(m, Policy::uniform(3, 2), 100, kSeed)) {
    worst = std::max(worst, r.worst_slack);
  }
  SplitMix64 rng(kSeed + 9);
  const FiniteMdp random = random_mdp(rng, 4, 3, 0.8);
  for (const CheckReport &r : check_intertwining(random, random_policy(rng, 4, 3), 100, kSeed)) {
    worst = std::max(worst, r.worst_slack);
  }
  return {worst, 1e-12, "100 fields on two models, all diagram paths"};
}

Outcome fixed_point() {
  // Single state: the iterates reach delta_2 exactly.
  const FiniteMdp single = load_mdp(data_dir / "single_state.json");
  BellmanConfig exact;
  exact.stop_tol = 1e-300;
  exact.max_iter = 200;
  const auto result = evaluate_policy(single, Policy::uniform(1, 1), exact, zero_field(single));
  const double analytic = cramer_distance(result.field(0, 0), point_mass(2.0));

  const FiniteMdp three = load_mdp(data_dir / "three_state.json");
  FixedPointOptions options;
  options.mc_samples = 1000000;
  options.seed = kSeed;
  double worst_ratio = analytic / 1e-12;
  std::string detail = "analytic " + std::to_string(analytic);
  for (const CheckReport &r : check_fixed_point(three, Policy::uniform(3, 2), options)) {
    worst_ratio = std::max(worst_ratio, r.worst_slack / r.tolerance);
    char line[200];
    std::snprintf(line, sizeof line, "; %s %.2e/%.2e", r.check_name.c_str(), r.worst_slack,
                  r.tolerance);
    detail += line;
    if (!r.detail.empty()) {
      detail += " [" + r.detail + "]";
    }
  }
  return {worst_ratio, 1.0, detail};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "discount_equality", 10.0, discount_equality},
      {2, "contraction", 60.0, contraction},
      {3, "dual_cramer_oracles", 10.0, dual_oracles},
      {4, "spectral_formula_budget", INFINITY, spectral_formula},
      {5, "closed_form_vs_quadrature", INFINITY, closed_form_vs_quadrature},
      {6, "monotone_recovery", INFINITY, monotone_recovery},
      {7, "fourier_of_cdf_difference", INFINITY, fourier_of_difference_agreement},
      {8, "isometry_of_U", INFINITY, isometry},
      {9, "intertwining", INFINITY, intertwining},
      {10, "fixed_point", 300.0, fixed_point},
  };
  bool all = true;
  for (const Criterion &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception &e) {
      o = {INFINITY, 0.0, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool passed = o.measured <= o.tolerance && seconds <= c.runtime_limit;
    all = all && passed;
    std::printf("%s %2d %-28s measured %.3e tol %.1e time %.2fs%s | %s\n",
                passed ? "PASS" : "FAIL", c.id, c.name, o.measured, o.tolerance, seconds,
                seconds > c.runtime_limit ? " (over time limit)" : "", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
