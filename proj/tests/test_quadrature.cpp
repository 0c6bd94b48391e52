#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cramer/quadrature.hpp"

using namespace cramer;

TEST(GaussLegendre, ExactForPolynomials) {
  for (std::size_t n : {2u, 8u, 16u, 32u}) {
    const GaussLegendre rule(n);
    double weight_sum = 0.0;
    for (double w : rule.weights) weight_sum += w;
    EXPECT_NEAR(weight_sum, 2.0, 1e-14);
    const int degree = static_cast<int>(2 * n - 1);
    const double value = rule.integrate([&](double x) { return std::pow(x, degree - 1); }, 0.0, 1.0);
    EXPECT_NEAR(value, 1.0 / degree, 1e-14);
  }
}

TEST(GaussLegendre, NodesSymmetricAndSorted) {
  const GaussLegendre rule(32);
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_NEAR(rule.nodes[i], -rule.nodes[31 - i], 1e-15);
    if (i > 0) {
      EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
    }
  }
}

TEST(PanelIntegrator, OscillatoryIntegrandOnGeometricPanels) {
  const PanelIntegrator integrator(32, 8);
  // Exact antiderivative of a cosine over six decades.
  const auto r = integrator.integrate([](double x) { return std::cos(5.0 * x); }, 1e-3, 1e3, 5.0);
  const double exact = (std::sin(5e3) - std::sin(5e-3)) / 5.0;
  EXPECT_NEAR(r.value, exact, 1e-11);
  EXPECT_LE(std::abs(r.value - exact), r.error_estimate + 1e-15);
}

TEST(PanelIntegrator, IncludeOriginAndLinear) {
  const PanelIntegrator integrator(16, 4);
  const auto r = integrator.integrate([](double x) { return std::exp(-x); }, 1e-4, 50.0, 0.0, true);
  EXPECT_NEAR(r.value, 1.0 - std::exp(-50.0), 1e-13);
  const auto l = integrator.integrate_linear([](double x) { return std::sin(x); }, 0.0,
                                             std::numbers::pi, 1.0);
  EXPECT_NEAR(l.value, 2.0, 1e-14);
}

TEST(PanelIntegrator, ErrorEstimateFlagsUnderResolution) {
  // Claiming frequency 0 for an oscillatory integrand leaves panels too wide;
  // the estimate must report a large error rather than a false small one.
  const PanelIntegrator integrator(8, 1);
  const auto r = integrator.integrate([](double x) { return std::cos(40.0 * x); }, 1.0, 10.0, 0.0);
  const double exact = (std::sin(400.0) - std::sin(40.0)) / 40.0;
  EXPECT_GT(r.error_estimate, 1e-6);
  EXPECT_GE(r.error_estimate, 0.1 * std::abs(r.value - exact));
}

TEST(PanelIntegrator, RejectsBadArguments) {
  EXPECT_THROW(PanelIntegrator(1, 8), std::invalid_argument);
  EXPECT_THROW(PanelIntegrator(32, 0), std::invalid_argument);
  const PanelIntegrator integrator(32, 8);
  EXPECT_THROW(integrator.integrate([](double) { return 1.0; }, 0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(integrator.integrate([](double) { return 1.0; }, 2.0, 1.0, 0.0), std::invalid_argument);
}
