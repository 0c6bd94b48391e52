#include "cramer/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cramer {

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

} // namespace

GaussLegendre::GaussLegendre(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("GaussLegendre: need at least two nodes");
  }
  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix. A few
  // Newton steps on P_n then polish them to full precision.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi,
                                                        Eigen::EigenvaluesOnly);
  nodes.resize(n);
  weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    for (int it = 0; it < 3; ++it) {
      const auto [p, dp] = legendre(n, x);
      x -= p / dp;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

PanelIntegrator::PanelIntegrator(std::size_t nodes_per_panel,
                                 std::size_t panels_per_decade)
    : fine_(nodes_per_panel), coarse_(std::max<std::size_t>(2, nodes_per_panel / 2)),
      panels_per_decade_(panels_per_decade) {
  if (panels_per_decade == 0) {
    throw std::invalid_argument("PanelIntegrator: need panels_per_decade >= 1");
  }
}

void PanelIntegrator::integrate_panel(const std::function<double(double)> &f,
                                      double a, double b, double max_frequency,
                                      QuadratureResult &acc) const {
  const double max_phase = static_cast<double>(fine_.size()) / 4.0;
  const double phase = max_frequency * (b - a);
  const auto pieces = static_cast<std::size_t>(
      std::max(1.0, std::ceil(phase / max_phase)));
  const double width = (b - a) / static_cast<double>(pieces);
  for (std::size_t i = 0; i < pieces; ++i) {
    const double lo = a + width * static_cast<double>(i);
    const double hi = (i + 1 == pieces) ? b : lo + width;
    const double fine = fine_.integrate(f, lo, hi);
    const double coarse = coarse_.integrate(f, lo, hi);
    acc.value += fine;
    acc.error_estimate += std::abs(fine - coarse) +
                          64.0 * std::numeric_limits<double>::epsilon() *
                              std::abs(fine);
    ++acc.panels;
  }
}

QuadratureResult PanelIntegrator::integrate(const std::function<double(double)> &f,
                                            double lo, double hi,
                                            double max_frequency,
                                            bool include_origin) const {
  if (!(lo > 0.0) || !(hi > lo)) {
    throw std::invalid_argument("PanelIntegrator: need 0 < lo < hi");
  }
  QuadratureResult acc;
  if (include_origin) {
    integrate_panel(f, 0.0, lo, max_frequency, acc);
  }
  const double ratio =
      std::pow(10.0, 1.0 / static_cast<double>(panels_per_decade_));
  double a = lo;
  while (a < hi) {
    const double b = std::min(hi, a * ratio);
    integrate_panel(f, a, b, max_frequency, acc);
    a = b;
  }
  return acc;
}

QuadratureResult
PanelIntegrator::integrate_linear(const std::function<double(double)> &f,
                                  double lo, double hi,
                                  double max_frequency) const {
  QuadratureResult acc;
  if (hi > lo) {
    integrate_panel(f, lo, hi, max_frequency, acc);
  }
  return acc;
}

} // namespace cramer
