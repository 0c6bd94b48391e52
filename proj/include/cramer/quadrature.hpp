#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cramer {

/// n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n);
  std::size_t size() const { return nodes.size(); }

  /// Rule applied to f on [a, b].
  template <typename F> double integrate(F &&f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      sum += weights[i] * f(mid + half * nodes[i]);
    }
    return half * sum;
  }
};

struct QuadratureResult {
  double value = 0.0;
  /// Sum over panels of |G_n - G_{n/2}| plus a rounding allowance.
  double error_estimate = 0.0;
  std::size_t panels = 0;
};

/**
 * Composite Gauss-Legendre integration of a smooth, possibly oscillatory f.
 *
 * [lo, hi] with lo > 0 is split into geometric panels, `panels_per_decade`
 * per factor of ten, and each panel is subdivided further until the phase
 * `max_frequency * width` is at most n / 4 radians. Each panel is integrated
 * with n and n / 2 nodes; their difference is the panel error estimate.
 * A leading linear panel [0, lo] is added when `include_origin` is set.
 */
class PanelIntegrator {
public:
  PanelIntegrator(std::size_t nodes_per_panel, std::size_t panels_per_decade);

  QuadratureResult integrate(const std::function<double(double)> &f, double lo,
                             double hi, double max_frequency,
                             bool include_origin = false) const;

  /// Same subdivision on a plain interval, without geometric grading.
  QuadratureResult integrate_linear(const std::function<double(double)> &f,
                                    double lo, double hi,
                                    double max_frequency) const;

private:
  void integrate_panel(const std::function<double(double)> &f, double a,
                       double b, double max_frequency,
                       QuadratureResult &acc) const;

  GaussLegendre fine_;
  GaussLegendre coarse_;
  std::size_t panels_per_decade_;
};

} // namespace cramer
