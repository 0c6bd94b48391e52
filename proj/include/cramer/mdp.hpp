#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cramer/distributions.hpp"
#include "cramer/field.hpp"

namespace cramer {

/**
 * Finite MDP with finite-support random rewards per (s, a, s').
 *
 * Transitions are stored as an (S*A) x S row-stochastic matrix whose row
 * s*A + a holds P(. | s, a). Rewards are bounded by `reward_bound()` in
 * absolute value, so every return lies in [-B, B] with
 * B = reward_bound / (1 - gamma).
 */
class FiniteMdp {
public:
  /// Validates shapes, row sums (1e-12) and the reward bound. If
  /// `reward_bound` is negative the tightest bound is used.
  static FiniteMdp create(std::size_t n_states, std::size_t n_actions,
                          double gamma, Eigen::MatrixXd transition,
                          std::vector<AtomicDistribution> rewards,
                          double reward_bound = -1.0);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_pairs() const { return n_states_ * n_actions_; }
  double gamma() const { return gamma_; }
  double reward_bound() const { return reward_bound_; }

  /// Symmetric interval containing every discounted return.
  Interval return_bound() const {
    const double b = reward_bound_ / (1.0 - gamma_);
    return {-b, b};
  }

  std::size_t pair_index(std::size_t s, std::size_t a) const;

  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_(static_cast<Eigen::Index>(pair_index(s, a)),
                       static_cast<Eigen::Index>(next));
  }
  const Eigen::MatrixXd &transition_matrix() const { return transition_; }

  const AtomicDistribution &reward(std::size_t s, std::size_t a,
                                   std::size_t next) const {
    return rewards_[pair_index(s, a) * n_states_ + next];
  }

  /// Copy with a different discount factor.
  FiniteMdp with_gamma(double gamma) const;

private:
  FiniteMdp() = default;

  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  double gamma_ = 0.0;
  double reward_bound_ = 0.0;
  Eigen::MatrixXd transition_;
  std::vector<AtomicDistribution> rewards_;
};

/// Stationary stochastic policy pi(a | s), an S x A row-stochastic matrix.
class Policy {
public:
  static Policy create(Eigen::MatrixXd probabilities);
  static Policy uniform(std::size_t n_states, std::size_t n_actions);

  std::size_t n_states() const {
    return static_cast<std::size_t>(probabilities_.rows());
  }
  std::size_t n_actions() const {
    return static_cast<std::size_t>(probabilities_.cols());
  }
  double operator()(std::size_t s, std::size_t a) const {
    return probabilities_(static_cast<Eigen::Index>(s),
                          static_cast<Eigen::Index>(a));
  }
  const Eigen::MatrixXd &matrix() const { return probabilities_; }

private:
  explicit Policy(Eigen::MatrixXd p) : probabilities_(std::move(p)) {}
  Eigen::MatrixXd probabilities_;
};

void check_compatible(const FiniteMdp &mdp, const Policy &policy);

/// Joint successor kernel over pairs: K(s*A+a, s'*A+a') = P(s'|s,a) pi(a'|s').
Eigen::MatrixXd policy_kernel(const FiniteMdp &mdp, const Policy &policy);

/// Law of R(s, a): the reward laws mixed over s' with weights P(s'|s,a).
AtomicDistribution reward_marginal(const FiniteMdp &mdp, std::size_t s,
                                   std::size_t a);

/// Mean returns Q(s, a) from the linear system Q = rbar + gamma K Q, as an
/// S x A matrix.
Eigen::MatrixXd classical_q_values(const FiniteMdp &mdp, const Policy &policy);

/// Smallest horizon T with gamma^T * R_max / (1 - gamma) <= bias.
std::size_t rollout_horizon(const FiniteMdp &mdp, double bias = 1e-9);

/// Empirical law of the truncated discounted return from (s, a), one atom of
/// weight 1/n per rollout. Sample i draws from its own stream keyed by
/// (seed, i), so the result does not depend on how samples are scheduled.
AtomicDistribution monte_carlo_returns(const FiniteMdp &mdp,
                                       const Policy &policy, std::size_t s,
                                       std::size_t a, std::size_t horizon,
                                       std::size_t n_samples,
                                       std::uint64_t seed);

} // namespace cramer
