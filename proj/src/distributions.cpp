#include "cramer/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cramer {

namespace {

constexpr double kMassTolerance = 1e-12;

void require_finite(double value, const char *what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

// Sorts by location and merges coincident locations. Zero entries are kept
// out of the result.
std::vector<Atom> sort_and_merge(std::vector<Atom> atoms) {
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom &a, const Atom &b) {
    return a.location < b.location;
  });
  std::vector<Atom> merged;
  merged.reserve(atoms.size());
  for (const Atom &atom : atoms) {
    if (!merged.empty() && merged.back().location == atom.location) {
      merged.back().weight += atom.weight;
    } else {
      merged.push_back(atom);
    }
  }
  std::erase_if(merged, [](const Atom &a) { return a.weight == 0.0; });
  return merged;
}

} // namespace

AtomicDistribution AtomicDistribution::from_pairs(std::span<const Atom> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("make_atomic: at least one atom is required");
  }
  std::vector<Atom> atoms;
  atoms.reserve(pairs.size());
  double total = 0.0;
  for (const Atom &atom : pairs) {
    require_finite(atom.location, "atom location");
    require_finite(atom.weight, "atom weight");
    if (atom.weight < 0.0) {
      throw std::invalid_argument("make_atomic: negative weight");
    }
    total += atom.weight;
    if (atom.weight > 0.0) {
      atoms.push_back(atom);
    }
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("make_atomic: weights sum to zero");
  }
  atoms = sort_and_merge(std::move(atoms));
  // Renormalise only outside the construction tolerance so that already
  // normalised input survives bit-for-bit.
  double sum = 0.0;
  for (const Atom &atom : atoms) {
    sum += atom.weight;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) {
    for (Atom &atom : atoms) {
      atom.weight /= sum;
    }
  }
  return AtomicDistribution(std::move(atoms));
}

double AtomicDistribution::mean() const {
  double m = 0.0;
  for (const Atom &atom : atoms_) {
    m += atom.weight * atom.location;
  }
  return m;
}

AtomicDistribution make_atomic(std::span<const Atom> pairs) {
  return AtomicDistribution::from_pairs(pairs);
}

AtomicDistribution point_mass(double location) {
  return make_atomic({{location, 1.0}});
}

AtomicDistribution bernoulli(double p, double low, double high) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("bernoulli: p must lie in [0, 1]");
  }
  return make_atomic({{low, 1.0 - p}, {high, p}});
}

AtomicDistribution affine_pushforward(const AtomicDistribution &dist,
                                      double scale, double shift) {
  std::vector<Atom> atoms(dist.atoms().begin(), dist.atoms().end());
  for (Atom &atom : atoms) {
    atom.location = scale * atom.location + shift;
  }
  return make_atomic(atoms);
}

GridCdf GridCdf::create(double x_min, double step, std::vector<double> values) {
  require_finite(x_min, "grid x_min");
  require_finite(step, "grid step");
  if (!(step > 0.0)) {
    throw std::invalid_argument("GridCdf: step must be positive");
  }
  if (values.size() < 2) {
    throw std::invalid_argument("GridCdf: at least two nodes are required");
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    require_finite(values[k], "grid value");
    if (values[k] < -kMassTolerance || values[k] > 1.0 + kMassTolerance) {
      throw std::invalid_argument("GridCdf: value outside [0, 1] at node " +
                                  std::to_string(k));
    }
    if (k > 0 && values[k] < values[k - 1] - kMassTolerance) {
      throw std::invalid_argument("GridCdf: values decrease at node " +
                                  std::to_string(k));
    }
  }
  if (std::abs(values.back() - 1.0) > kMassTolerance) {
    throw std::invalid_argument("GridCdf: last value must be 1");
  }
  double running = 0.0;
  for (double &v : values) {
    v = std::clamp(v, running, 1.0);
    running = v;
  }
  values.back() = 1.0;
  return GridCdf(x_min, step, std::move(values));
}

double cdf_eval(const AtomicDistribution &dist, double x) {
  require_finite(x, "cdf argument");
  const auto atoms = dist.atoms();
  auto it = std::upper_bound(
      atoms.begin(), atoms.end(), x,
      [](double value, const Atom &atom) { return value < atom.location; });
  double total = 0.0;
  for (auto a = atoms.begin(); a != it; ++a) {
    total += a->weight;
  }
  return std::min(total, 1.0);
}

double cdf_eval(const GridCdf &grid, double x) {
  require_finite(x, "cdf argument");
  if (x < grid.x_min()) {
    return 0.0;
  }
  const double pos = std::floor((x - grid.x_min()) / grid.step());
  if (pos >= static_cast<double>(grid.size() - 1)) {
    return 1.0;
  }
  auto k = static_cast<std::size_t>(pos);
  // floor() can land one node too far right when x sits just below a node.
  if (k > 0 && x < grid.node(k)) {
    --k;
  }
  return grid.values()[k];
}

double cdf_interpolate(const GridCdf &grid, double x) {
  if (x < grid.x_min()) {
    return 0.0;
  }
  if (x >= grid.x_max()) {
    return 1.0;
  }
  const double pos = (x - grid.x_min()) / grid.step();
  const auto k = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
  const double t = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
  const auto v = grid.values();
  return std::clamp(v[k] + t * (v[k + 1] - v[k]), 0.0, 1.0);
}

GridCdf to_grid(const AtomicDistribution &dist, double x_min, double step,
                std::size_t n) {
  if (!(step > 0.0) || n < 2) {
    throw std::invalid_argument("to_grid: need step > 0 and n >= 2");
  }
  const double x_max = x_min + step * static_cast<double>(n - 1);
  if (dist.min_location() < x_min || dist.max_location() > x_max) {
    throw std::invalid_argument("to_grid: grid does not cover the support");
  }
  std::vector<double> values(n);
  const auto atoms = dist.atoms();
  std::size_t next = 0;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double node = x_min + step * static_cast<double>(k);
    while (next < atoms.size() && atoms[next].location <= node) {
      cumulative += atoms[next].weight;
      ++next;
    }
    values[k] = std::min(cumulative, 1.0);
  }
  values.back() = 1.0;
  return GridCdf::create(x_min, step, std::move(values));
}

AtomicDistribution to_atomic(const GridCdf &grid) {
  std::vector<Atom> atoms;
  double previous = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double jump = grid.values()[k] - previous;
    if (jump > 0.0) {
      atoms.push_back({grid.node(k), jump});
    }
    previous = grid.values()[k];
  }
  return make_atomic(atoms);
}

std::vector<Atom> signed_difference(const AtomicDistribution &lhs,
                                    const AtomicDistribution &rhs) {
  std::vector<Atom> terms;
  terms.reserve(lhs.size() + rhs.size());
  for (const Atom &a : lhs.atoms()) {
    terms.push_back(a);
  }
  for (const Atom &a : rhs.atoms()) {
    terms.push_back({a.location, -a.weight});
  }
  return sort_and_merge(std::move(terms));
}

namespace {

// Integral of H^2 where H is the running sum of `jumps` (sorted).
double squared_l2_of_jump_function(std::span<const Atom> jumps) {
  double h = 0.0;
  double integral = 0.0;
  for (std::size_t j = 0; j + 1 < jumps.size(); ++j) {
    h += jumps[j].weight;
    const double width = jumps[j + 1].location - jumps[j].location;
    integral += h * h * width;
  }
  return integral;
}

} // namespace

double cramer_distance(const AtomicDistribution &lhs,
                       const AtomicDistribution &rhs) {
  const auto diff = signed_difference(lhs, rhs);
  return std::sqrt(squared_l2_of_jump_function(diff));
}

double cramer_distance(const GridCdf &lhs, const GridCdf &rhs) {
  if (!lhs.same_grid(rhs)) {
    return cramer_distance(to_atomic(lhs), to_atomic(rhs));
  }
  double integral = 0.0;
  const auto a = lhs.values();
  const auto b = rhs.values();
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double d = a[k] - b[k];
    integral += d * d;
  }
  return std::sqrt(integral * lhs.step());
}

double cramer_distance(const AtomicDistribution &lhs, const GridCdf &rhs) {
  return cramer_distance(lhs, to_atomic(rhs));
}

double cramer_distance(const GridCdf &lhs, const AtomicDistribution &rhs) {
  return cramer_distance(to_atomic(lhs), rhs);
}

double cramer_distance_energy_form(const AtomicDistribution &lhs,
                                   const AtomicDistribution &rhs) {
  const auto c = signed_difference(lhs, rhs);
  double off_diagonal = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (std::size_t k = j + 1; k < c.size(); ++k) {
      off_diagonal += c[j].weight * c[k].weight *
                      std::abs(c[j].location - c[k].location);
    }
  }
  // -1/2 sum_{j,k} = -sum_{j<k} since the diagonal vanishes.
  return std::sqrt(std::max(0.0, -off_diagonal));
}

CdfDifference CdfDifference::from_jumps(std::vector<Atom> jumps) {
  for (const Atom &j : jumps) {
    require_finite(j.location, "jump location");
    require_finite(j.weight, "jump size");
  }
  jumps = sort_and_merge(std::move(jumps));
  double total = 0.0;
  for (const Atom &j : jumps) {
    total += j.weight;
  }
  if (std::abs(total) > kMassTolerance) {
    throw std::invalid_argument(
        "CdfDifference: jumps must sum to zero (difference of two CDFs)");
  }
  return CdfDifference(std::move(jumps));
}

double CdfDifference::operator()(double x) const {
  double h = 0.0;
  for (const Atom &j : jumps_) {
    if (j.location > x) {
      break;
    }
    h += j.weight;
  }
  return h;
}

std::vector<CdfDifference::Segment> CdfDifference::segments() const {
  std::vector<Segment> out;
  double h = 0.0;
  for (std::size_t j = 0; j + 1 < jumps_.size(); ++j) {
    h += jumps_[j].weight;
    out.push_back({jumps_[j].location, jumps_[j + 1].location, h});
  }
  return out;
}

CentredCdf centre(const AtomicDistribution &dist) {
  std::vector<Atom> jumps(dist.atoms().begin(), dist.atoms().end());
  jumps.push_back({0.0, -1.0});
  return CdfDifference::from_jumps(std::move(jumps));
}

CentredCdf centre(const GridCdf &grid) { return centre(to_atomic(grid)); }

AtomicDistribution uncentre(const CentredCdf &centred) {
  std::vector<Atom> atoms(centred.jumps().begin(), centred.jumps().end());
  atoms.push_back({0.0, 1.0});
  atoms = sort_and_merge(std::move(atoms));
  for (const Atom &a : atoms) {
    if (a.weight < -kMassTolerance) {
      throw std::invalid_argument(
          "uncentre: jump pattern is not a centred CDF of a probability law");
    }
  }
  std::erase_if(atoms, [](const Atom &a) { return a.weight <= 0.0; });
  return make_atomic(atoms);
}

CdfDifference cdf_difference(const AtomicDistribution &lhs,
                             const AtomicDistribution &rhs) {
  return CdfDifference::from_jumps(signed_difference(lhs, rhs));
}

MergeResult merge_atoms_with_bound(const AtomicDistribution &dist,
                                   double delta) {
  if (!(delta >= 0.0)) {
    throw std::invalid_argument("merge_atoms: delta must be nonnegative");
  }
  if (delta == 0.0) {
    return {dist, 0.0, 0.0};
  }
  const auto atoms = dist.atoms();
  std::vector<Atom> merged;
  merged.reserve(atoms.size());
  double sum_sq = 0.0;
  double cluster_bound = 0.0;
  std::size_t start = 0;
  while (start < atoms.size()) {
    std::size_t end = start + 1;
    while (end < atoms.size() &&
           atoms[end].location - atoms[start].location <= delta) {
      ++end;
    }
    if (end == start + 1) {
      merged.push_back(atoms[start]);
    } else {
      double mass = 0.0;
      double moment = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        mass += atoms[j].weight;
        moment += atoms[j].weight * atoms[j].location;
      }
      const double lo = atoms[start].location;
      const double hi = atoms[end - 1].location;
      const double centre = std::clamp(moment / mass, lo, hi);
      merged.push_back({centre, mass});
      sum_sq += mass * mass * (hi - lo);
      cluster_bound += mass * std::sqrt(hi - lo);
    }
    start = end;
  }
  return {make_atomic(merged), std::sqrt(sum_sq), cluster_bound};
}

AtomicDistribution merge_atoms(const AtomicDistribution &dist, double delta) {
  return merge_atoms_with_bound(dist, delta).dist;
}

MergeResult project_to_lattice(const AtomicDistribution &dist, double origin,
                               double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing) || !std::isfinite(origin)) {
    throw std::invalid_argument("project_to_lattice: spacing must be positive");
  }
  std::vector<Atom> projected;
  projected.reserve(2 * dist.size());
  double sum_sq = 0.0;
  double cluster_bound = 0.0;
  double cell_mass = 0.0;
  double cell = std::numeric_limits<double>::quiet_NaN();
  const auto close_cell = [&] {
    sum_sq += cell_mass * cell_mass * spacing;
    cluster_bound += cell_mass * std::sqrt(spacing);
    cell_mass = 0.0;
  };
  for (const Atom &a : dist.atoms()) {
    const double k = std::floor((a.location - origin) / spacing);
    const double lower = origin + k * spacing;
    const double upper = origin + (k + 1.0) * spacing;
    if (a.location <= lower) {
      projected.push_back({lower, a.weight});
      continue;
    }
    if (a.location >= upper) {
      projected.push_back({upper, a.weight});
      continue;
    }
    if (k != cell) {
      close_cell();
      cell = k;
    }
    cell_mass += a.weight;
    const double up = (a.location - lower) / spacing;
    projected.push_back({lower, a.weight * (1.0 - up)});
    projected.push_back({upper, a.weight * up});
  }
  close_cell();
  return {make_atomic(projected), std::sqrt(sum_sq), cluster_bound};
}

AtomicDistribution mixture(std::span<const double> weights,
                           std::span<const AtomicDistribution> parts) {
  if (weights.size() != parts.size() || parts.empty()) {
    throw std::invalid_argument("mixture: weights and parts must match");
  }
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (weights[i] < 0.0) {
      throw std::invalid_argument("mixture: negative weight");
    }
    if (weights[i] == 0.0) {
      continue;
    }
    for (const Atom &a : parts[i].atoms()) {
      atoms.push_back({a.location, weights[i] * a.weight});
    }
  }
  return make_atomic(atoms);
}

} // namespace cramer
