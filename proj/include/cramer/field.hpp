#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cramer/distributions.hpp"

namespace cramer {

/// Closed interval on the return axis.
struct Interval {
  double lo;
  double hi;

  bool contains(double x, double slack = 0.0) const {
    return x >= lo - slack && x <= hi + slack;
  }
  double width() const { return hi - lo; }

  friend bool operator==(const Interval &, const Interval &) = default;
};

/**
 * A table indexed by (state, action), stored row-major by state.
 *
 * `Entry` is the per-pair carrier: AtomicDistribution or GridCdf for return
 * fields, SignedExpSum for spectral fields. One carrier per field.
 */
template <typename Entry> class BasicField {
public:
  BasicField(std::size_t n_states, std::size_t n_actions,
             std::vector<Entry> entries)
      : n_states_(n_states), n_actions_(n_actions),
        entries_(std::move(entries)) {
    if (n_states == 0 || n_actions == 0) {
      throw std::invalid_argument("field: empty state or action set");
    }
    if (entries_.size() != n_states * n_actions) {
      throw std::invalid_argument("field: entry count does not match shape");
    }
  }

  static BasicField filled(std::size_t n_states, std::size_t n_actions,
                           const Entry &value) {
    return BasicField(n_states, n_actions,
                      std::vector<Entry>(n_states * n_actions, value));
  }

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t index(std::size_t s, std::size_t a) const {
    if (s >= n_states_ || a >= n_actions_) {
      throw std::out_of_range("field: (state, action) index out of range");
    }
    return s * n_actions_ + a;
  }

  const Entry &operator()(std::size_t s, std::size_t a) const {
    return entries_[index(s, a)];
  }
  const Entry &operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Entry> &entries() const { return entries_; }

  bool same_shape(const BasicField &other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
  }

  friend bool operator==(const BasicField &, const BasicField &) = default;

private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<Entry> entries_;
};

using ReturnField = BasicField<AtomicDistribution>;
using GridField = BasicField<GridCdf>;

/// Largest atom count over the entries of an atomic field.
inline std::size_t max_atom_count(const ReturnField &field) {
  std::size_t m = 0;
  for (const auto &d : field.entries()) {
    m = std::max(m, d.size());
  }
  return m;
}

/// Hull of all atom locations in an atomic field.
inline Interval support_hull(const ReturnField &field) {
  Interval hull{field[0].min_location(), field[0].max_location()};
  for (const auto &d : field.entries()) {
    hull.lo = std::min(hull.lo, d.min_location());
    hull.hi = std::max(hull.hi, d.max_location());
  }
  return hull;
}

} // namespace cramer
