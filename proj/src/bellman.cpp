#include "cramer/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cramer {

std::string to_string(Backend backend) {
  return backend == Backend::atomic ? "atomic" : "grid";
}

Backend parse_backend(const std::string &name) {
  if (name == "atomic") {
    return Backend::atomic;
  }
  if (name == "grid") {
    return Backend::grid;
  }
  throw std::invalid_argument("unknown backend '" + name +
                              "' (expected atomic or grid)");
}

std::string to_string(Reduction reduction) {
  return reduction == Reduction::cluster ? "cluster" : "lattice";
}

Reduction parse_reduction(const std::string &name) {
  if (name == "cluster") {
    return Reduction::cluster;
  }
  if (name == "lattice") {
    return Reduction::lattice;
  }
  throw std::invalid_argument("unknown reduction '" + name +
                              "' (expected cluster or lattice)");
}

GridSpec GridSpec::spanning(Interval range, std::size_t n) {
  if (n < 2 || !(range.hi > range.lo)) {
    throw std::invalid_argument("GridSpec: need n >= 2 and a nonempty range");
  }
  return {range.lo, range.width() / static_cast<double>(n - 1), n};
}

void BellmanConfig::validate() const {
  if (!(stop_tol > 0.0)) {
    throw std::invalid_argument("BellmanConfig: stop_tol must be positive");
  }
  if (!(merge_delta >= 0.0) || !std::isfinite(merge_delta)) {
    throw std::invalid_argument("BellmanConfig: merge_delta must be >= 0");
  }
  if ((backend == Backend::grid) != grid.has_value()) {
    throw std::invalid_argument(
        "BellmanConfig: a grid spec is required exactly for the grid backend");
  }
  if (grid && (grid->n < 2 || !(grid->step > 0.0))) {
    throw std::invalid_argument("BellmanConfig: grid needs n >= 2, step > 0");
  }
}

namespace {

void check_kernel(const Eigen::MatrixXd &kernel, std::size_t n_pairs) {
  const auto n = static_cast<Eigen::Index>(n_pairs);
  if (kernel.rows() != n || kernel.cols() != n) {
    throw std::invalid_argument("conditional expectation: kernel shape does "
                                "not match the field");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((kernel.row(i).array() < 0.0).any() ||
        std::abs(kernel.row(i).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument(
          "conditional expectation: kernel row is not a probability vector");
    }
  }
}

void check_shape(const FiniteMdp &mdp, std::size_t n_states,
                 std::size_t n_actions) {
  if (n_states != mdp.n_states() || n_actions != mdp.n_actions()) {
    throw std::invalid_argument("field shape does not match the mdp");
  }
}

void check_support(const AtomicDistribution &dist, const Interval &bound,
                   std::size_t s, std::size_t a) {
  const double slack = 1e-9 * std::max(1.0, bound.width());
  if (!bound.contains(dist.min_location(), slack) ||
      !bound.contains(dist.max_location(), slack)) {
    throw std::domain_error(
        "bellman: updated law at (s=" + std::to_string(s) +
        ", a=" + std::to_string(a) + ") leaves the return bound");
  }
}

// Restores a valid CDF after interpolated reads.
std::vector<double> monotone_clamp(std::vector<double> values) {
  double running = 0.0;
  for (double &v : values) {
    v = std::clamp(v, 0.0, 1.0);
    v = std::max(v, running);
    running = v;
  }
  values.back() = 1.0;
  return values;
}

void check_grid_mass(double top, const char *op) {
  if (top < 1.0 - 1e-9) {
    throw std::domain_error(std::string(op) +
                            ": resulting support exceeds the grid");
  }
}

} // namespace

ReturnField apply_reward_translation(const ReturnField &field,
                                     const FiniteMdp &mdp) {
  check_shape(mdp, field.n_states(), field.n_actions());
  std::vector<AtomicDistribution> out;
  out.reserve(field.size());
  for (std::size_t s = 0; s < field.n_states(); ++s) {
    for (std::size_t a = 0; a < field.n_actions(); ++a) {
      const AtomicDistribution reward = reward_marginal(mdp, s, a);
      std::vector<Atom> atoms;
      atoms.reserve(reward.size() * field(s, a).size());
      for (const Atom &r : reward.atoms()) {
        for (const Atom &x : field(s, a).atoms()) {
          atoms.push_back({x.location + r.location, x.weight * r.weight});
        }
      }
      out.push_back(make_atomic(atoms));
    }
  }
  return ReturnField(field.n_states(), field.n_actions(), std::move(out));
}

ReturnField apply_discount_scale(const ReturnField &field, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("discount scale: gamma must lie in (0, 1)");
  }
  std::vector<AtomicDistribution> out;
  out.reserve(field.size());
  for (const auto &entry : field.entries()) {
    out.push_back(affine_pushforward(entry, gamma, 0.0));
  }
  return ReturnField(field.n_states(), field.n_actions(), std::move(out));
}

ReturnField apply_conditional_expectation(const ReturnField &field,
                                          const Eigen::MatrixXd &kernel) {
  check_kernel(kernel, field.size());
  std::vector<AtomicDistribution> out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::vector<Atom> atoms;
    for (std::size_t j = 0; j < field.size(); ++j) {
      const double w = kernel(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j));
      if (w == 0.0) {
        continue;
      }
      for (const Atom &x : field[j].atoms()) {
        atoms.push_back({x.location, w * x.weight});
      }
    }
    out.push_back(make_atomic(atoms));
  }
  return ReturnField(field.n_states(), field.n_actions(), std::move(out));
}

GridField apply_reward_translation(const GridField &field, const FiniteMdp &mdp) {
  check_shape(mdp, field.n_states(), field.n_actions());
  std::vector<GridCdf> out;
  out.reserve(field.size());
  for (std::size_t s = 0; s < field.n_states(); ++s) {
    for (std::size_t a = 0; a < field.n_actions(); ++a) {
      const GridCdf &f = field(s, a);
      const AtomicDistribution reward = reward_marginal(mdp, s, a);
      std::vector<double> values(f.size(), 0.0);
      for (std::size_t k = 0; k < f.size(); ++k) {
        for (const Atom &r : reward.atoms()) {
          values[k] += r.weight * cdf_interpolate(f, f.node(k) - r.location);
        }
      }
      check_grid_mass(values.back(), "reward translation");
      out.push_back(
          GridCdf::create(f.x_min(), f.step(), monotone_clamp(std::move(values))));
    }
  }
  return GridField(field.n_states(), field.n_actions(), std::move(out));
}

GridField apply_discount_scale(const GridField &field, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("discount scale: gamma must lie in (0, 1)");
  }
  std::vector<GridCdf> out;
  out.reserve(field.size());
  for (const GridCdf &f : field.entries()) {
    std::vector<double> values(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
      values[k] = cdf_interpolate(f, f.node(k) / gamma);
    }
    out.push_back(
        GridCdf::create(f.x_min(), f.step(), monotone_clamp(std::move(values))));
  }
  return GridField(field.n_states(), field.n_actions(), std::move(out));
}

GridField apply_conditional_expectation(const GridField &field,
                                        const Eigen::MatrixXd &kernel) {
  check_kernel(kernel, field.size());
  std::vector<GridCdf> out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::vector<double> values(field[i].size(), 0.0);
    for (std::size_t j = 0; j < field.size(); ++j) {
      if (!field[j].same_grid(field[i])) {
        throw std::invalid_argument("grid field entries must share one grid");
      }
      const double w = kernel(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j));
      if (w == 0.0) {
        continue;
      }
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] += w * field[j].values()[k];
      }
    }
    out.push_back(GridCdf::create(field[i].x_min(), field[i].step(),
                                  monotone_clamp(std::move(values))));
  }
  return GridField(field.n_states(), field.n_actions(), std::move(out));
}

namespace {

MergeResult reduce(const AtomicDistribution &dist, const BellmanConfig &config,
                   Interval bound) {
  if (config.merge_delta == 0.0 || config.reduction == Reduction::cluster) {
    return merge_atoms_with_bound(dist, config.merge_delta);
  }
  // Nodes bound.lo + k * spacing with the bound's upper end among them.
  const double cells = std::ceil(bound.width() / config.merge_delta);
  return project_to_lattice(dist, bound.lo, bound.width() / cells);
}

} // namespace

ReturnField bellman_apply(const ReturnField &field, const FiniteMdp &mdp,
                          const Policy &policy, const BellmanConfig &config,
                          double &merge_bound) {
  config.validate();
  check_compatible(mdp, policy);
  check_shape(mdp, field.n_states(), field.n_actions());
  const double gamma = mdp.gamma();
  const Interval bound = mdp.return_bound();
  merge_bound = 0.0;
  std::vector<AtomicDistribution> out;
  out.reserve(field.size());
  std::vector<Atom> atoms;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      atoms.clear();
      for (std::size_t next = 0; next < mdp.n_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        if (p == 0.0) {
          continue;
        }
        for (const Atom &r : mdp.reward(s, a, next).atoms()) {
          for (std::size_t b = 0; b < mdp.n_actions(); ++b) {
            const double w = p * r.weight * policy(next, b);
            if (w == 0.0) {
              continue;
            }
            for (const Atom &z : field(next, b).atoms()) {
              atoms.push_back({r.location + gamma * z.location, w * z.weight});
            }
          }
        }
      }
      MergeResult merged = reduce(make_atomic(atoms), config, bound);
      merge_bound = std::max(merge_bound, merged.cramer_bound);
      check_support(merged.dist, bound, s, a);
      out.push_back(std::move(merged.dist));
    }
  }
  return ReturnField(field.n_states(), field.n_actions(), std::move(out));
}

ReturnField bellman_apply(const ReturnField &field, const FiniteMdp &mdp,
                          const Policy &policy, const BellmanConfig &config) {
  double ignored = 0.0;
  return bellman_apply(field, mdp, policy, config, ignored);
}

GridField bellman_apply(const GridField &field, const FiniteMdp &mdp,
                        const Policy &policy, const BellmanConfig &config) {
  config.validate();
  check_compatible(mdp, policy);
  check_shape(mdp, field.n_states(), field.n_actions());
  const double gamma = mdp.gamma();
  const GridCdf &first = field[0];
  for (const GridCdf &f : field.entries()) {
    if (!f.same_grid(first)) {
      throw std::invalid_argument("grid field entries must share one grid");
    }
  }
  std::vector<GridCdf> out;
  out.reserve(field.size());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      std::vector<double> values(first.size(), 0.0);
      for (std::size_t next = 0; next < mdp.n_states(); ++next) {
        const double p = mdp.transition(s, a, next);
        if (p == 0.0) {
          continue;
        }
        for (const Atom &r : mdp.reward(s, a, next).atoms()) {
          for (std::size_t b = 0; b < mdp.n_actions(); ++b) {
            const double w = p * r.weight * policy(next, b);
            if (w == 0.0) {
              continue;
            }
            const GridCdf &f = field(next, b);
            for (std::size_t k = 0; k < values.size(); ++k) {
              values[k] +=
                  w * cdf_interpolate(f, (first.node(k) - r.location) / gamma);
            }
          }
        }
      }
      check_grid_mass(values.back(), "bellman");
      out.push_back(GridCdf::create(first.x_min(), first.step(),
                                    monotone_clamp(std::move(values))));
    }
  }
  return GridField(field.n_states(), field.n_actions(), std::move(out));
}

double bellman_cdf_pointwise(const ReturnField &field, const FiniteMdp &mdp,
                             const Policy &policy, std::size_t s,
                             std::size_t a, double x) {
  double total = 0.0;
  for (std::size_t next = 0; next < mdp.n_states(); ++next) {
    const double p = mdp.transition(s, a, next);
    if (p == 0.0) {
      continue;
    }
    for (const Atom &r : mdp.reward(s, a, next).atoms()) {
      for (std::size_t b = 0; b < mdp.n_actions(); ++b) {
        const double w = p * r.weight * policy(next, b);
        if (w == 0.0) {
          continue;
        }
        total += w * cdf_eval(field(next, b), (x - r.location) / mdp.gamma());
      }
    }
  }
  return total;
}

bool rewards_independent_of_successor(const FiniteMdp &mdp) {
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const AtomicDistribution *first = nullptr;
      for (std::size_t next = 0; next < mdp.n_states(); ++next) {
        if (mdp.transition(s, a, next) == 0.0) {
          continue;
        }
        if (first == nullptr) {
          first = &mdp.reward(s, a, next);
        } else if (!(*first == mdp.reward(s, a, next))) {
          return false;
        }
      }
    }
  }
  return true;
}

ReturnField bellman_apply_by_primitives(const ReturnField &field,
                                        const FiniteMdp &mdp,
                                        const Policy &policy) {
  return apply_reward_translation(
      apply_conditional_expectation(apply_discount_scale(field, mdp.gamma()),
                                    policy_kernel(mdp, policy)),
      mdp);
}

double field_distance(const ReturnField &lhs, const ReturnField &rhs) {
  if (!lhs.same_shape(rhs)) {
    throw std::invalid_argument("field_distance: shape mismatch");
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    sup = std::max(sup, cramer_distance(lhs[i], rhs[i]));
  }
  return sup;
}

double field_distance(const GridField &lhs, const GridField &rhs) {
  if (!lhs.same_shape(rhs)) {
    throw std::invalid_argument("field_distance: shape mismatch");
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    sup = std::max(sup, cramer_distance(lhs[i], rhs[i]));
  }
  return sup;
}

ReturnField zero_field(const FiniteMdp &mdp) {
  return ReturnField::filled(mdp.n_states(), mdp.n_actions(), point_mass(0.0));
}

GridField zero_grid_field(const FiniteMdp &mdp, const GridSpec &grid) {
  return GridField::filled(mdp.n_states(), mdp.n_actions(),
                           to_grid(point_mass(0.0), grid.x_min, grid.step,
                                   grid.n));
}

namespace {

std::size_t atom_count(const ReturnField &field) { return max_atom_count(field); }
std::size_t atom_count(const GridField &field) { return field[0].size(); }

template <typename Field, typename Step>
Evaluation<Field> iterate(const FiniteMdp &mdp, const BellmanConfig &config,
                          const Field &init, Step step) {
  config.validate();
  const double root = std::sqrt(mdp.gamma());
  const double factor = root / (1.0 - root);
  Evaluation<Field> result{init, {}, false, 0.0, 0.0, 0.0};
  for (std::size_t n = 1; n <= config.max_iter; ++n) {
    double eta = 0.0;
    Field next = step(result.field, eta);
    const double d = field_distance(result.field, next);
    result.merge_drift = root * result.merge_drift + eta;
    result.banach_bound = d * factor;
    result.certified_error = (eta + root * d) / (1.0 - root);
    result.trace.push_back({n, d, result.banach_bound, atom_count(next)});
    result.field = std::move(next);
    if (result.banach_bound <= config.stop_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

} // namespace

Evaluation<ReturnField> evaluate_policy(const FiniteMdp &mdp,
                                        const Policy &policy,
                                        const BellmanConfig &config,
                                        const ReturnField &init) {
  return iterate(mdp, config, init, [&](const ReturnField &f, double &eta) {
    return bellman_apply(f, mdp, policy, config, eta);
  });
}

Evaluation<GridField> evaluate_policy(const FiniteMdp &mdp, const Policy &policy,
                                      const BellmanConfig &config,
                                      const GridField &init) {
  return iterate(mdp, config, init, [&](const GridField &f, double &eta) {
    eta = 0.0;
    return bellman_apply(f, mdp, policy, config);
  });
}

} // namespace cramer
