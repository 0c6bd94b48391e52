#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cramer/field.hpp"
#include "cramer/mdp.hpp"

namespace cramer {

enum class Backend { atomic, grid };

std::string to_string(Backend backend);
Backend parse_backend(const std::string &name);

/// How the atomic backend controls atom growth after each update.
/// cluster: merge_atoms with width merge_delta. lattice: project_to_lattice
/// onto the nodes of the return bound with spacing at most merge_delta.
enum class Reduction { cluster, lattice };

std::string to_string(Reduction reduction);
Reduction parse_reduction(const std::string &name);

/// Uniform grid x_min + k * step, k < n.
struct GridSpec {
  double x_min;
  double step;
  std::size_t n;

  double x_max() const { return x_min + step * static_cast<double>(n - 1); }

  /// Grid with `n` nodes spanning `range` exactly.
  static GridSpec spanning(Interval range, std::size_t n);

  friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

struct BellmanConfig {
  double merge_delta = 0.0;
  Reduction reduction = Reduction::cluster;
  Backend backend = Backend::atomic;
  std::optional<GridSpec> grid;
  double stop_tol = 1e-8;
  std::size_t max_iter = 1000;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Primitive operators on atomic fields. Each returns a field of the same
// shape; the three compose to the Bellman update (see bellman_apply).

/// S_R: entry (s, a) becomes the law of X + R(s, a), X independent of R.
ReturnField apply_reward_translation(const ReturnField &field,
                                     const FiniteMdp &mdp);
/// D_gamma: pushforward under x -> gamma x.
ReturnField apply_discount_scale(const ReturnField &field, double gamma);
/// C^pi: entry (s, a) becomes the kernel-weighted mixture of all entries.
ReturnField apply_conditional_expectation(const ReturnField &field,
                                          const Eigen::MatrixXd &kernel);

// The same operators on grid fields (all entries on one grid).
GridField apply_reward_translation(const GridField &field, const FiniteMdp &mdp);
GridField apply_discount_scale(const GridField &field, double gamma);
GridField apply_conditional_expectation(const GridField &field,
                                        const Eigen::MatrixXd &kernel);

/**
 * One distributional Bellman update, entry (s, a) <- Law(R(s, a) + gamma Z')
 * with (s', a') ~ P^pi(. | s, a) and R drawn from the reward law of
 * (s, a, s'). The atomic result is merged with `config.merge_delta` and
 * checked against the return bound of the MDP. With merge_delta > 0 the
 * result is reduced per `config.reduction`.
 */
ReturnField bellman_apply(const ReturnField &field, const FiniteMdp &mdp,
                          const Policy &policy, const BellmanConfig &config);
GridField bellman_apply(const GridField &field, const FiniteMdp &mdp,
                        const Policy &policy, const BellmanConfig &config);

/// Same update, also reporting the Cramér bound on the merge perturbation
/// (sup over entries).
ReturnField bellman_apply(const ReturnField &field, const FiniteMdp &mdp,
                          const Policy &policy, const BellmanConfig &config,
                          double &merge_bound);

/// Direct pointwise CDF form E_{r,(s',a')}[F_{s',a'}((x - r) / gamma)] of
/// the updated entry (s, a) at x.
double bellman_cdf_pointwise(const ReturnField &field, const FiniteMdp &mdp,
                             const Policy &policy, std::size_t s,
                             std::size_t a, double x);

/// Sup over (s, a) of the Cramér distance between entries.
double field_distance(const ReturnField &lhs, const ReturnField &rhs);
double field_distance(const GridField &lhs, const GridField &rhs);

struct TraceRow {
  std::size_t iteration;
  double successive_distance;
  double banach_bound;
  std::size_t atom_count_max;
};

template <typename Field> struct Evaluation {
  Field field;
  std::vector<TraceRow> trace;
  bool converged = false;
  /// sqrt(gamma) / (1 - sqrt(gamma)) times the last successive distance.
  double banach_bound = 0.0;
  /// Accumulated merge perturbation sum_k gamma^((n-k)/2) eta_k of the last
  /// iterate relative to the exact iterate from the same start.
  double merge_drift = 0.0;
  /// Certified distance of the returned field to the exact fixed point,
  /// (eta_n + sqrt(gamma) d_n) / (1 - sqrt(gamma)).
  double certified_error = 0.0;
};

/// All-delta_0 atomic field.
ReturnField zero_field(const FiniteMdp &mdp);
/// All-delta_0 grid field on `grid`.
GridField zero_grid_field(const FiniteMdp &mdp, const GridSpec &grid);

/**
 * Banach iteration F_{n+1} = T F_n from `init` until the a-posteriori bound
 * d(F_n, F_{n+1}) sqrt(gamma) / (1 - sqrt(gamma)) <= stop_tol, or max_iter
 * applications. Every application appends one trace row.
 */
Evaluation<ReturnField> evaluate_policy(const FiniteMdp &mdp,
                                        const Policy &policy,
                                        const BellmanConfig &config,
                                        const ReturnField &init);
Evaluation<GridField> evaluate_policy(const FiniteMdp &mdp, const Policy &policy,
                                      const BellmanConfig &config,
                                      const GridField &init);

} // namespace cramer

namespace cramer {

/// True when every reward law R(s, a, s') is the same for all successors s'
/// with positive probability, so R(s, a) is independent of (s', a').
bool rewards_independent_of_successor(const FiniteMdp &mdp);

/// S_R o C^pi o D_gamma built from the primitive operators. Equals
/// bellman_apply (without merging) when rewards_independent_of_successor().
ReturnField bellman_apply_by_primitives(const ReturnField &field,
                                        const FiniteMdp &mdp,
                                        const Policy &policy);

} // namespace cramer
