#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library code it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include <gsl/gsl_integration.h>

#include "cramer/bellman.hpp"
#include "cramer/distributions.hpp"

namespace oracle {

using cramer::AtomicDistribution;

/// F(x) by direct summation.
inline double cdf(const AtomicDistribution &d, double x) {
  double f = 0.0;
  for (const auto &a : d.atoms()) {
    if (a.location <= x) {
      f += a.weight;
    }
  }
  return f;
}

/// Breakpoints of F1 - F2, sorted and unique.
inline std::vector<double> breakpoints(const AtomicDistribution &p1,
                                       const AtomicDistribution &p2) {
  std::vector<double> xs;
  for (const auto &a : p1.atoms()) xs.push_back(a.location);
  for (const auto &a : p2.atoms()) xs.push_back(a.location);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

/// Cramér distance by evaluating both CDFs at every segment midpoint.
inline double cramer(const AtomicDistribution &p1, const AtomicDistribution &p2) {
  const std::vector<double> xs = breakpoints(p1, p2);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double mid = 0.5 * (xs[i] + xs[i + 1]);
    const double h = cdf(p1, mid) - cdf(p2, mid);
    sum += h * h * (xs[i + 1] - xs[i]);
  }
  return std::sqrt(sum);
}

/// Law of R + gamma Z' at (s, a) by enumerating every successor path.
inline std::map<double, double> bellman_entry(const cramer::ReturnField &field,
                                              const cramer::FiniteMdp &mdp,
                                              const cramer::Policy &policy,
                                              std::size_t s, std::size_t a) {
  std::map<double, double> law;
  for (std::size_t next = 0; next < mdp.n_states(); ++next) {
    for (const auto &r : mdp.reward(s, a, next).atoms()) {
      for (std::size_t b = 0; b < mdp.n_actions(); ++b) {
        for (const auto &z : field(next, b).atoms()) {
          const double w = mdp.transition(s, a, next) * r.weight * policy(next, b) * z.weight;
          if (w > 0.0) {
            law[r.location + mdp.gamma() * z.location] += w;
          }
        }
      }
    }
  }
  return law;
}

/// (1/sqrt(2 pi)) int H(x) e^{-i omega x} dx for H = F1 - F2, integrating the
/// constant pieces of H with fixed 32-point Gauss-Legendre tables on
/// subintervals of phase at most 4.
inline std::complex<double> fourier_of_difference(const AtomicDistribution &p1,
                                                  const AtomicDistribution &p2,
                                                  double omega) {
  static gsl_integration_glfixed_table *table = gsl_integration_glfixed_table_alloc(32);
  const std::vector<double> xs = breakpoints(p1, p2);
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double h = cdf(p1, 0.5 * (xs[i] + xs[i + 1])) - cdf(p2, 0.5 * (xs[i] + xs[i + 1]));
    if (h == 0.0) continue;
    const double width = xs[i + 1] - xs[i];
    const auto pieces = static_cast<int>(std::ceil(std::abs(omega) * width / 4.0)) + 1;
    for (int k = 0; k < pieces; ++k) {
      const double lo = xs[i] + width * k / pieces;
      const double hi = xs[i] + width * (k + 1) / pieces;
      for (std::size_t n = 0; n < 32; ++n) {
        double x = 0.0;
        double w = 0.0;
        gsl_integration_glfixed_point(lo, hi, n, &x, &w, table);
        re += w * h * std::cos(omega * x);
        im -= w * h * std::sin(omega * x);
      }
    }
  }
  return std::complex<double>(re, im) / std::sqrt(2.0 * std::numbers::pi);
}

/// Largest relative gap, with `floor` guarding values near zero.
inline double relative(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

} // namespace oracle
