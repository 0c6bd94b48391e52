#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cramer/bellman.hpp"
#include "cramer/distributions.hpp"
#include "cramer/field.hpp"
#include "cramer/mdp.hpp"

namespace cramer {

/// One term c e^{i omega x} of an exponential sum.
struct ExpTerm {
  double location;
  double coefficient;

  friend bool operator==(const ExpTerm &, const ExpTerm &) = default;
};

/**
 * Finite real-coefficient exponential sum omega -> sum_j c_j e^{i omega x_j}.
 *
 * Exact representation for characteristic functions of atomic laws, their
 * spectral embeddings phi_P - 1, and differences of those. Locations are
 * strictly increasing and no coefficient is exactly zero.
 */
class SignedExpSum {
public:
  SignedExpSum() = default;
  static SignedExpSum from_terms(std::vector<ExpTerm> terms);

  std::span<const ExpTerm> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  std::complex<double> operator()(double omega) const;
  double coefficient_sum() const;
  /// sum_j c_j x_j, i.e. -i times the derivative at omega = 0.
  double first_moment() const;
  /// Largest |x_j - x_k|.
  double spread() const;

  friend SignedExpSum operator+(const SignedExpSum &lhs, const SignedExpSum &rhs);
  friend SignedExpSum operator-(const SignedExpSum &lhs, const SignedExpSum &rhs);
  friend SignedExpSum operator*(double scale, const SignedExpSum &sum);
  friend bool operator==(const SignedExpSum &, const SignedExpSum &) = default;

private:
  explicit SignedExpSum(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {}
  std::vector<ExpTerm> terms_;
};

/// Regularised spectral geometry with weight (omega^2 + epsilon)^{-1}.
class EpsGeometry {
public:
  explicit EpsGeometry(double epsilon);
  double epsilon() const { return epsilon_; }

private:
  double epsilon_;
};

/// Frequency quadrature settings for the numerical cross-checks.
struct QuadratureSpec {
  double omega_max = 1e4;
  std::size_t panels_per_decade = 8;
  std::size_t nodes_per_panel = 32;
  /// Inner exclusion radius, used only for the singular omega^{-2} weight.
  double omega_min = 1e-6;

  void validate() const;
};

/// Error accounting of a frequency-domain quadrature, in squared-distance
/// units.
struct QuadratureBudget {
  /// Bound on the part of the tail beyond omega_max not captured by
  /// `tail_correction`.
  double tail_bound = 0.0;
  /// Closed-form tail beyond omega_max (sine-integral pair sum) added to the
  /// estimate.
  double tail_correction = 0.0;
  /// Analytic contribution of |omega| < omega_min added to the estimate.
  double inner_correction = 0.0;
  /// Bound on the error of `inner_correction`.
  double inner_uncertainty = 0.0;
  /// Panel-wise Gauss error estimate.
  double panel_estimate = 0.0;

  double total() const { return tail_bound + inner_uncertainty + panel_estimate; }
};

struct SpectralEstimate {
  /// Estimated distance (square root of `squared`).
  double value = 0.0;
  double squared = 0.0;
  QuadratureBudget budget;
  /// Half-width of the distance interval implied by `budget.total()`.
  double distance_budget = 0.0;
};

std::complex<double> char_fn_eval(const AtomicDistribution &dist, double omega);

/// Characteristic function as an exponential sum (coefficients p_k at x_k).
SignedExpSum characteristic_sum(const AtomicDistribution &dist);

/// Phi(P) = phi_P - 1.
SignedExpSum spectral_embed(const AtomicDistribution &dist);

/// H_eps inner product, evaluated in closed form through
/// int e^{i omega d} / (omega^2 + eps) d omega = (pi / sqrt(eps)) e^{-|d| sqrt(eps)}.
double h_eps_inner(const SignedExpSum &u, const SignedExpSum &v,
                   const EpsGeometry &geom);
double h_eps_norm(const SignedExpSum &u, const EpsGeometry &geom);

/// ||Phi(P1) - Phi(P2)||_{H_eps}.
double reg_distance(const AtomicDistribution &p1, const AtomicDistribution &p2,
                    const EpsGeometry &geom);

/// Fourier transform of H = F_{P1} - F_{P2} at omega != 0 from the
/// characteristic functions.
std::complex<double> cdf_diff_fourier(const AtomicDistribution &p1,
                                      const AtomicDistribution &p2, double omega);

/// Cramér distance from the characteristic-function integral, with error
/// budget.
SpectralEstimate cramer_via_spectrum(const AtomicDistribution &p1,
                                     const AtomicDistribution &p2,
                                     const QuadratureSpec &quad = {});

/// Brute-force quadrature of the H_eps distance between embeddings.
SpectralEstimate reg_distance_quadrature(const AtomicDistribution &p1,
                                         const AtomicDistribution &p2,
                                         const EpsGeometry &geom,
                                         const QuadratureSpec &quad = {});

/// ||H||_{H^cdf_eps} by quadrature of omega^2 / (omega^2 + eps) |H^(omega)|^2,
/// with the transform taken segment by segment from the values of H.
SpectralEstimate hcdf_norm_quadrature(const CdfDifference &h,
                                      const EpsGeometry &geom,
                                      const QuadratureSpec &quad = {});

/// U on jump representations. Over the reals U maps a jump function with
/// jumps J_j at x_j to sum_j J_j e^{i omega x_j}.
SignedExpSum transport_U(const CdfDifference &h);
CdfDifference transport_U_inv(const SignedExpSum &f);

/// V(F_P) = U(F_P - F_{delta_0}).
SignedExpSum transport_V(const AtomicDistribution &dist);
/// Inverse of V on its range; throws if `f` is not an embedded law.
AtomicDistribution transport_V_inv(const SignedExpSum &f);

using SpectralField = BasicField<SignedExpSum>;

SpectralField lift_V(const ReturnField &field);
ReturnField lift_V_inv(const SpectralField &field);

/// Spectral Bellman operator V o T o V^{-1}.
SpectralField spectral_bellman_apply(const SpectralField &mu, const FiniteMdp &mdp,
                                     const Policy &policy,
                                     const BellmanConfig &config);

/// The same update computed on the exponential sums directly:
/// phi_new(omega) = E[e^{i omega r} phi_{Z(s',a')}(gamma omega)]. No merging.
SpectralField spectral_bellman_apply_direct(const SpectralField &mu,
                                            const FiniteMdp &mdp,
                                            const Policy &policy);

/// Cramér metric pulled back through V: field_distance(V^-1 mu1, V^-1 mu2).
double induced_field_distance(const SpectralField &mu1, const SpectralField &mu2);

/// Sup over (s, a) of the H_eps distance between entries.
double reg_field_distance(const SpectralField &mu1, const SpectralField &mu2,
                          const EpsGeometry &geom);

struct SweepRow {
  double epsilon;
  double reg_distance;
  double cdf_side_distance;
  double gap;
  /// reg_distance did not decrease relative to the previous row.
  bool monotone;
};

/// reg_distance along a strictly decreasing list of positive epsilons.
std::vector<SweepRow> eps_sweep(const AtomicDistribution &p1,
                                const AtomicDistribution &p2,
                                std::span<const double> eps_list);

std::vector<double> default_eps_list();

} // namespace cramer
