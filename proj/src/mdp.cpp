#include "cramer/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cramer/rng.hpp"

namespace cramer {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string pair_name(std::size_t s, std::size_t a) {
  std::ostringstream out;
  out << "(s=" << s << ", a=" << a << ")";
  return out.str();
}

} // namespace

FiniteMdp FiniteMdp::create(std::size_t n_states, std::size_t n_actions,
                            double gamma, Eigen::MatrixXd transition,
                            std::vector<AtomicDistribution> rewards,
                            double reward_bound) {
  if (n_states == 0 || n_actions == 0) {
    throw std::invalid_argument("mdp: need at least one state and action");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("mdp: gamma must lie strictly inside (0, 1)");
  }
  const auto rows = static_cast<Eigen::Index>(n_states * n_actions);
  if (transition.rows() != rows ||
      transition.cols() != static_cast<Eigen::Index>(n_states)) {
    throw std::invalid_argument("mdp: transition matrix has wrong shape");
  }
  if (rewards.size() != n_states * n_actions * n_states) {
    throw std::invalid_argument("mdp: reward table has wrong size");
  }
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      const auto row = transition.row(static_cast<Eigen::Index>(s * n_actions + a));
      if (!row.allFinite() || (row.array() < 0.0).any()) {
        throw std::invalid_argument("mdp: invalid transition probability at " +
                                    pair_name(s, a));
      }
      if (std::abs(row.sum() - 1.0) > kRowTolerance) {
        std::ostringstream msg;
        msg << "mdp: transition row " << pair_name(s, a) << " sums to "
            << row.sum() << ", expected 1";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  double tightest = 0.0;
  for (const auto &r : rewards) {
    tightest = std::max({tightest, std::abs(r.min_location()),
                         std::abs(r.max_location())});
  }
  if (reward_bound < 0.0) {
    reward_bound = tightest;
  } else if (tightest > reward_bound) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      const auto &r = rewards[i];
      if (std::max(std::abs(r.min_location()), std::abs(r.max_location())) >
          reward_bound) {
        const std::size_t pair = i / n_states;
        std::ostringstream msg;
        msg << "mdp: reward at " << pair_name(pair / n_actions, pair % n_actions)
            << " -> s'=" << i % n_states << " exceeds the declared bound "
            << reward_bound;
        throw std::invalid_argument(msg.str());
      }
    }
  }
  FiniteMdp mdp;
  mdp.n_states_ = n_states;
  mdp.n_actions_ = n_actions;
  mdp.gamma_ = gamma;
  mdp.reward_bound_ = reward_bound;
  mdp.transition_ = std::move(transition);
  mdp.rewards_ = std::move(rewards);
  return mdp;
}

std::size_t FiniteMdp::pair_index(std::size_t s, std::size_t a) const {
  if (s >= n_states_ || a >= n_actions_) {
    throw std::out_of_range("mdp: index " + pair_name(s, a) + " out of range");
  }
  return s * n_actions_ + a;
}

FiniteMdp FiniteMdp::with_gamma(double gamma) const {
  return create(n_states_, n_actions_, gamma, transition_, rewards_,
                reward_bound_);
}

Policy Policy::create(Eigen::MatrixXd probabilities) {
  if (probabilities.rows() == 0 || probabilities.cols() == 0) {
    throw std::invalid_argument("policy: empty table");
  }
  for (Eigen::Index s = 0; s < probabilities.rows(); ++s) {
    const auto row = probabilities.row(s);
    if (!row.allFinite() || (row.array() < 0.0).any()) {
      throw std::invalid_argument("policy: invalid probability in state " +
                                  std::to_string(s));
    }
    if (std::abs(row.sum() - 1.0) > kRowTolerance) {
      throw std::invalid_argument("policy: row for state " + std::to_string(s) +
                                  " does not sum to 1");
    }
  }
  return Policy(std::move(probabilities));
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
  return Policy(Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions),
      1.0 / static_cast<double>(n_actions)));
}

void check_compatible(const FiniteMdp &mdp, const Policy &policy) {
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("policy shape does not match the mdp");
  }
}

Eigen::MatrixXd policy_kernel(const FiniteMdp &mdp, const Policy &policy) {
  check_compatible(mdp, policy);
  const auto n = static_cast<Eigen::Index>(mdp.n_pairs());
  const auto n_actions = static_cast<Eigen::Index>(mdp.n_actions());
  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index row = 0; row < n; ++row) {
    for (Eigen::Index next = 0; next < static_cast<Eigen::Index>(mdp.n_states());
         ++next) {
      kernel.row(row).segment(next * n_actions, n_actions) =
          mdp.transition_matrix()(row, next) * policy.matrix().row(next);
    }
  }
  return kernel;
}

AtomicDistribution reward_marginal(const FiniteMdp &mdp, std::size_t s,
                                   std::size_t a) {
  std::vector<double> weights;
  std::vector<AtomicDistribution> parts;
  for (std::size_t next = 0; next < mdp.n_states(); ++next) {
    const double p = mdp.transition(s, a, next);
    if (p > 0.0) {
      weights.push_back(p);
      parts.push_back(mdp.reward(s, a, next));
    }
  }
  return mixture(weights, parts);
}

Eigen::MatrixXd classical_q_values(const FiniteMdp &mdp, const Policy &policy) {
  const Eigen::MatrixXd kernel = policy_kernel(mdp, policy);
  const auto n = kernel.rows();
  Eigen::VectorXd mean_reward(n);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      mean_reward(static_cast<Eigen::Index>(mdp.pair_index(s, a))) =
          reward_marginal(mdp, s, a).mean();
    }
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * kernel;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(std::abs(lu.determinant()) > 0.0)) {
    throw std::runtime_error("classical_q_values: singular linear system");
  }
  const Eigen::VectorXd q = lu.solve(mean_reward);
  if (!q.allFinite()) {
    throw std::runtime_error("classical_q_values: non-finite solution");
  }
  Eigen::MatrixXd table(static_cast<Eigen::Index>(mdp.n_states()),
                        static_cast<Eigen::Index>(mdp.n_actions()));
  for (Eigen::Index i = 0; i < n; ++i) {
    table(i / table.cols(), i % table.cols()) = q(i);
  }
  return table;
}

std::size_t rollout_horizon(const FiniteMdp &mdp, double bias) {
  if (mdp.reward_bound() == 0.0) {
    return 1;
  }
  const double scale = mdp.reward_bound() / (1.0 - mdp.gamma());
  const double t = std::log(bias / scale) / std::log(mdp.gamma());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t)));
}

namespace {

struct SamplingTables {
  // Per pair: successor probabilities. Per (pair, s'): reward atoms.
  std::vector<std::vector<double>> next_state;
  std::vector<std::vector<double>> reward_weights;
  std::vector<std::vector<double>> reward_values;
  std::vector<std::vector<double>> action;
};

SamplingTables build_tables(const FiniteMdp &mdp, const Policy &policy) {
  SamplingTables t;
  const std::size_t S = mdp.n_states();
  const std::size_t A = mdp.n_actions();
  for (std::size_t pair = 0; pair < S * A; ++pair) {
    std::vector<double> row(S);
    for (std::size_t next = 0; next < S; ++next) {
      row[next] = mdp.transition(pair / A, pair % A, next);
      const auto &r = mdp.reward(pair / A, pair % A, next);
      std::vector<double> w;
      std::vector<double> v;
      for (const Atom &atom : r.atoms()) {
        v.push_back(atom.location);
        w.push_back(atom.weight);
      }
      t.reward_weights.push_back(std::move(w));
      t.reward_values.push_back(std::move(v));
    }
    t.next_state.push_back(std::move(row));
  }
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> row(A);
    for (std::size_t a = 0; a < A; ++a) {
      row[a] = policy(s, a);
    }
    t.action.push_back(std::move(row));
  }
  return t;
}

double rollout(const SamplingTables &t, std::size_t n_states,
               std::size_t n_actions, double gamma, std::size_t s,
               std::size_t a, std::size_t horizon, SplitMix64 &rng) {
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    const std::size_t pair = s * n_actions + a;
    const std::size_t next = rng.categorical(t.next_state[pair]);
    const std::size_t edge = pair * n_states + next;
    const std::size_t r = rng.categorical(t.reward_weights[edge]);
    total += discount * t.reward_values[edge][r];
    discount *= gamma;
    s = next;
    a = rng.categorical(t.action[s]);
  }
  return total;
}

} // namespace

AtomicDistribution monte_carlo_returns(const FiniteMdp &mdp,
                                       const Policy &policy, std::size_t s,
                                       std::size_t a, std::size_t horizon,
                                       std::size_t n_samples,
                                       std::uint64_t seed) {
  check_compatible(mdp, policy);
  mdp.pair_index(s, a);
  if (n_samples == 0) {
    throw std::invalid_argument("monte_carlo_returns: need at least one sample");
  }
  const SamplingTables tables = build_tables(mdp, policy);
  std::vector<double> samples(n_samples);
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      SplitMix64 rng = SplitMix64::stream(seed, i);
      samples[i] = rollout(tables, mdp.n_states(), mdp.n_actions(), mdp.gamma(),
                           s, a, horizon, rng);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(
      std::thread::hardware_concurrency(), 1, 16);
  if (n_threads == 1 || n_samples < 4096) {
    work(0, n_samples);
  } else {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (n_samples + n_threads - 1) / n_threads;
    for (std::size_t begin = 0; begin < n_samples; begin += chunk) {
      threads.emplace_back(work, begin, std::min(n_samples, begin + chunk));
    }
  }
  std::vector<Atom> atoms(n_samples);
  const double w = 1.0 / static_cast<double>(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    atoms[i] = {samples[i], w};
  }
  return make_atomic(atoms);
}

} // namespace cramer
