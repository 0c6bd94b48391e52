#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace cramer {

/// A point mass of a finite-support law: `weight` units of probability at
/// `location`.
struct Atom {
  double location;
  double weight;

  friend bool operator==(const Atom &, const Atom &) = default;
};

/**
 * Exact finite-support probability law on the real line.
 *
 * Atoms are kept sorted by strictly increasing location, every weight is
 * positive and the weights sum to one. Instances are immutable; all
 * operations below are pure.
 */
class AtomicDistribution {
public:
  /// Builds a law from raw (location, weight) pairs. Zero-weight pairs are
  /// dropped, coincident locations are merged by adding weights and the
  /// result is normalised to unit mass.
  static AtomicDistribution from_pairs(std::span<const Atom> pairs);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double min_location() const { return atoms_.front().location; }
  double max_location() const { return atoms_.back().location; }
  double mean() const;

  friend bool operator==(const AtomicDistribution &,
                         const AtomicDistribution &) = default;

private:
  explicit AtomicDistribution(std::vector<Atom> atoms)
      : atoms_(std::move(atoms)) {}

  std::vector<Atom> atoms_;
};

AtomicDistribution make_atomic(std::span<const Atom> pairs);
inline AtomicDistribution make_atomic(std::initializer_list<Atom> pairs) {
  return make_atomic(std::span<const Atom>(pairs.begin(), pairs.size()));
}

AtomicDistribution point_mass(double location);

/// Two-point law with mass `p` at `high` and `1 - p` at `low`.
AtomicDistribution bernoulli(double p, double low = 0.0, double high = 1.0);

/// Law of `scale * X + shift` for X distributed as `dist`.
AtomicDistribution affine_pushforward(const AtomicDistribution &dist,
                                      double scale, double shift);

/**
 * Right-continuous CDF sampled on the uniform grid x_min + k * step.
 *
 * Stored values use step semantics: F(x) = values[k] on [x_k, x_{k+1}),
 * zero below x_min and one from the last node on. Values are nondecreasing,
 * clamped to [0, 1], and the last value is exactly one.
 */
class GridCdf {
public:
  static GridCdf create(double x_min, double step, std::vector<double> values);

  double x_min() const { return x_min_; }
  double step() const { return step_; }
  double x_max() const {
    return x_min_ + step_ * static_cast<double>(values_.size() - 1);
  }
  double node(std::size_t k) const {
    return x_min_ + step_ * static_cast<double>(k);
  }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool same_grid(const GridCdf &other) const {
    return x_min_ == other.x_min_ && step_ == other.step_ &&
           values_.size() == other.values_.size();
  }

  friend bool operator==(const GridCdf &, const GridCdf &) = default;

private:
  GridCdf(double x_min, double step, std::vector<double> values)
      : x_min_(x_min), step_(step), values_(std::move(values)) {}

  double x_min_;
  double step_;
  std::vector<double> values_;
};

double cdf_eval(const AtomicDistribution &dist, double x);
double cdf_eval(const GridCdf &grid, double x);

/// Piecewise-linear read of a grid CDF between nodes; 0 below the first node
/// and 1 above the last. Used only by the grid Bellman backend.
double cdf_interpolate(const GridCdf &grid, double x);

/// Samples F at every grid node. Throws if the grid does not cover the
/// support.
GridCdf to_grid(const AtomicDistribution &dist, double x_min, double step,
                std::size_t n);

/// The step-semantics law of a grid CDF: an atom at each node carrying the
/// jump of F there.
AtomicDistribution to_atomic(const GridCdf &grid);

/// Cramér distance (L2 distance of CDFs). Exact piecewise-constant
/// integration over the merged breakpoints.
double cramer_distance(const AtomicDistribution &lhs,
                       const AtomicDistribution &rhs);
double cramer_distance(const GridCdf &lhs, const GridCdf &rhs);
double cramer_distance(const AtomicDistribution &lhs, const GridCdf &rhs);
double cramer_distance(const GridCdf &lhs, const AtomicDistribution &rhs);

/// Independent closed form sqrt(-1/2 sum_jk c_j c_k |x_j - x_k|) over the
/// signed atoms of lhs - rhs.
double cramer_distance_energy_form(const AtomicDistribution &lhs,
                                   const AtomicDistribution &rhs);

/// Signed atom list of lhs - rhs, sorted, coincident locations merged and
/// exact zeros removed. The coefficients sum to zero.
std::vector<Atom> signed_difference(const AtomicDistribution &lhs,
                                    const AtomicDistribution &rhs);

/**
 * Difference of two CDFs represented by its jumps: H(x) = sum of the jumps
 * at locations <= x. Jumps are sorted by location and sum to zero, so H
 * vanishes outside the hull of the jump locations.
 */
class CdfDifference {
public:
  static CdfDifference from_jumps(std::vector<Atom> jumps);

  std::span<const Atom> jumps() const { return jumps_; }
  bool is_zero() const { return jumps_.empty(); }
  double operator()(double x) const;

  /// Constant pieces (left, right, value) of H between consecutive jumps.
  struct Segment {
    double left;
    double right;
    double value;
  };
  std::vector<Segment> segments() const;

  friend bool operator==(const CdfDifference &,
                         const CdfDifference &) = default;

private:
  explicit CdfDifference(std::vector<Atom> jumps) : jumps_(std::move(jumps)) {}
  std::vector<Atom> jumps_;
};

/// The centred CDF H = F_P - F_{delta_0}.
using CentredCdf = CdfDifference;

CentredCdf centre(const AtomicDistribution &dist);
CentredCdf centre(const GridCdf &grid);

/// Inverse of centre(): recovers the law from its centred CDF.
AtomicDistribution uncentre(const CentredCdf &centred);

CdfDifference cdf_difference(const AtomicDistribution &lhs,
                             const AtomicDistribution &rhs);

struct MergeResult {
  AtomicDistribution dist;
  /// sqrt(sum_c m_c^2 diam_c): a Cramér bound on the merge perturbation.
  double cramer_bound;
  /// sum_c m_c sqrt(diam_c), the coarser per-cluster bound.
  double cluster_bound;
};

/// Collapses runs of atoms whose span is at most `delta` onto their
/// weighted-mean location. Mass and mean are preserved.
MergeResult merge_atoms_with_bound(const AtomicDistribution &dist,
                                   double delta);
AtomicDistribution merge_atoms(const AtomicDistribution &dist, double delta);

/// Splits each atom's mass linearly between the two neighbouring nodes of
/// the lattice origin + k * spacing. Mass and mean are preserved and the map
/// is non-expansive in the Cramér metric. The bounds count only mass lying
/// strictly between nodes.
MergeResult project_to_lattice(const AtomicDistribution &dist, double origin,
                               double spacing);

/// Finite mixture sum_i w_i * P_i. Weights must be nonnegative with positive
/// sum; they are normalised.
AtomicDistribution mixture(std::span<const double> weights,
                           std::span<const AtomicDistribution> parts);

} // namespace cramer
