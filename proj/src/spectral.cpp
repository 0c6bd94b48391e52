#include "cramer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_expint.h>

#include <Eigen/Dense>

#include "cramer/quadrature.hpp"

namespace cramer {

namespace {

using std::numbers::pi;
const double kSqrtTwoPi = std::sqrt(2.0 * pi);

} // namespace

SignedExpSum SignedExpSum::from_terms(std::vector<ExpTerm> terms) {
  for (const ExpTerm &t : terms) {
    if (!std::isfinite(t.location) || !std::isfinite(t.coefficient)) {
      throw std::invalid_argument("SignedExpSum: non-finite term");
    }
  }
  std::stable_sort(terms.begin(), terms.end(),
                   [](const ExpTerm &a, const ExpTerm &b) {
                     return a.location < b.location;
                   });
  std::vector<ExpTerm> merged;
  merged.reserve(terms.size());
  for (const ExpTerm &t : terms) {
    if (!merged.empty() && merged.back().location == t.location) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const ExpTerm &t) { return t.coefficient == 0.0; });
  return SignedExpSum(std::move(merged));
}

std::complex<double> SignedExpSum::operator()(double omega) const {
  double re = 0.0;
  double im = 0.0;
  for (const ExpTerm &t : terms_) {
    const double phase = omega * t.location;
    re += t.coefficient * std::cos(phase);
    im += t.coefficient * std::sin(phase);
  }
  return {re, im};
}

double SignedExpSum::coefficient_sum() const {
  double s = 0.0;
  for (const ExpTerm &t : terms_) {
    s += t.coefficient;
  }
  return s;
}

double SignedExpSum::first_moment() const {
  double s = 0.0;
  for (const ExpTerm &t : terms_) {
    s += t.coefficient * t.location;
  }
  return s;
}

double SignedExpSum::spread() const {
  return terms_.empty() ? 0.0 : terms_.back().location - terms_.front().location;
}

SignedExpSum operator+(const SignedExpSum &lhs, const SignedExpSum &rhs) {
  std::vector<ExpTerm> terms(lhs.terms_.begin(), lhs.terms_.end());
  terms.insert(terms.end(), rhs.terms_.begin(), rhs.terms_.end());
  return SignedExpSum::from_terms(std::move(terms));
}

SignedExpSum operator-(const SignedExpSum &lhs, const SignedExpSum &rhs) {
  return lhs + (-1.0) * rhs;
}

SignedExpSum operator*(double scale, const SignedExpSum &sum) {
  std::vector<ExpTerm> terms(sum.terms_.begin(), sum.terms_.end());
  for (ExpTerm &t : terms) {
    t.coefficient *= scale;
  }
  return SignedExpSum::from_terms(std::move(terms));
}

EpsGeometry::EpsGeometry(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("EpsGeometry: epsilon must be positive");
  }
}

void QuadratureSpec::validate() const {
  if (!(omega_max > omega_min) || !(omega_min >= 0.0)) {
    throw std::invalid_argument("QuadratureSpec: need omega_max > omega_min >= 0");
  }
  if (panels_per_decade < 1 || nodes_per_panel < 2) {
    throw std::invalid_argument("QuadratureSpec: counts must be positive");
  }
}

std::complex<double> char_fn_eval(const AtomicDistribution &dist, double omega) {
  if (!std::isfinite(omega)) {
    throw std::invalid_argument("char_fn_eval: omega must be finite");
  }
  return characteristic_sum(dist)(omega);
}

SignedExpSum characteristic_sum(const AtomicDistribution &dist) {
  std::vector<ExpTerm> terms;
  terms.reserve(dist.size());
  for (const Atom &a : dist.atoms()) {
    terms.push_back({a.location, a.weight});
  }
  return SignedExpSum::from_terms(std::move(terms));
}

SignedExpSum spectral_embed(const AtomicDistribution &dist) {
  std::vector<ExpTerm> terms;
  terms.reserve(dist.size() + 1);
  for (const Atom &a : dist.atoms()) {
    terms.push_back({a.location, a.weight});
  }
  terms.push_back({0.0, -1.0});
  return SignedExpSum::from_terms(std::move(terms));
}

double h_eps_inner(const SignedExpSum &u, const SignedExpSum &v,
                   const EpsGeometry &geom) {
  if (u.is_zero() || v.is_zero()) {
    return 0.0;
  }
  const double root = std::sqrt(geom.epsilon());
  const auto nu = static_cast<Eigen::Index>(u.size());
  const auto nv = static_cast<Eigen::Index>(v.size());
  Eigen::VectorXd cu(nu);
  Eigen::VectorXd cv(nv);
  Eigen::MatrixXd kernel(nu, nv);
  for (Eigen::Index j = 0; j < nu; ++j) {
    cu(j) = u.terms()[j].coefficient;
    for (Eigen::Index k = 0; k < nv; ++k) {
      // e^{-|d| r} = 1 + expm1(-|d| r); the constant part is split off so
      // that small epsilon does not cancel catastrophically.
      kernel(j, k) = std::expm1(
          -std::abs(u.terms()[j].location - v.terms()[k].location) * root);
    }
  }
  for (Eigen::Index k = 0; k < nv; ++k) {
    cv(k) = v.terms()[k].coefficient;
  }
  const double constant = cu.sum() * cv.sum();
  return (constant + cu.dot(kernel * cv)) / (2.0 * root);
}

double h_eps_norm(const SignedExpSum &u, const EpsGeometry &geom) {
  return std::sqrt(std::max(0.0, h_eps_inner(u, u, geom)));
}

double reg_distance(const AtomicDistribution &p1, const AtomicDistribution &p2,
                    const EpsGeometry &geom) {
  return h_eps_norm(spectral_embed(p1) - spectral_embed(p2), geom);
}

std::complex<double> cdf_diff_fourier(const AtomicDistribution &p1,
                                      const AtomicDistribution &p2,
                                      double omega) {
  if (omega == 0.0 || !std::isfinite(omega)) {
    throw std::invalid_argument("cdf_diff_fourier: omega must be finite and nonzero");
  }
  const std::complex<double> diff = char_fn_eval(p1, -omega) - char_fn_eval(p2, -omega);
  return diff / (std::complex<double>(0.0, omega) * kSqrtTwoPi);
}

namespace {

struct Tail {
  double correction = 0.0;
  double bound = 0.0;
};

// (1/pi) int_big^inf |sum_j c_j e^{i w x_j}|^2 / (w^2 + eps) dw.
// Each pair contributes c_j c_k int cos(d w) / w^2 with d = x_j - x_k, which
// has the closed form cos(d W) / W - d (pi/2 - Si(d W)). Replacing
// 1 / (w^2 + eps) by 1 / w^2 costs at most eps / (3 W^3) per pair.
Tail pair_tail(std::span<const ExpTerm> terms, double big, double eps) {
  gsl_set_error_handler_off();
  Tail tail;
  const double weight_gap = eps / (3.0 * big * big * big);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    for (std::size_t k = j; k < terms.size(); ++k) {
      const double d = std::abs(terms[j].location - terms[k].location);
      double value = 1.0 / big;
      double error = 0.0;
      if (d > 0.0) {
        gsl_sf_result si;
        gsl_sf_Si_e(d * big, &si);
        value = std::cos(d * big) / big - d * (pi / 2.0 - si.val);
        error = d * si.err + 4.0 * std::numeric_limits<double>::epsilon() / big;
      }
      const double multiplicity = j == k ? 1.0 : 2.0;
      const double cc = terms[j].coefficient * terms[k].coefficient;
      tail.correction += multiplicity * cc * value;
      tail.bound += multiplicity * std::abs(cc) * (error + weight_gap);
    }
  }
  tail.correction /= pi;
  tail.bound /= pi;
  return tail;
}

void finish(SpectralEstimate &est) {
  est.value = std::sqrt(std::max(0.0, est.squared));
  const double e = est.budget.total();
  const double upper = std::sqrt(std::max(0.0, est.squared + e)) - est.value;
  const double lower = est.value - std::sqrt(std::max(0.0, est.squared - e));
  est.distance_budget = std::max(upper, lower);
}

} // namespace

SpectralEstimate cramer_via_spectrum(const AtomicDistribution &p1,
                                     const AtomicDistribution &p2,
                                     const QuadratureSpec &quad) {
  quad.validate();
  if (!(quad.omega_min > 0.0)) {
    throw std::invalid_argument(
        "cramer_via_spectrum: the singular weight needs omega_min > 0");
  }
  const SignedExpSum delta = characteristic_sum(p1) - characteristic_sum(p2);
  SpectralEstimate est;
  if (delta.is_zero()) {
    return est;
  }
  const PanelIntegrator integrator(quad.nodes_per_panel, quad.panels_per_decade);
  const auto integrand = [&delta](double omega) {
    return std::norm(delta(omega)) / (omega * omega);
  };
  const QuadratureResult body = integrator.integrate(
      integrand, quad.omega_min, quad.omega_max, delta.spread());

  const double m1 = delta.first_moment();
  double m2 = 0.0;
  for (const ExpTerm &t : delta.terms()) {
    m2 += std::abs(t.coefficient) * t.location * t.location;
  }
  const double w0 = quad.omega_min;
  est.budget.inner_correction = m1 * m1 * w0 / pi;
  est.budget.inner_uncertainty =
      (std::abs(m1) * m2 * w0 * w0 / 2.0 + m2 * m2 * w0 * w0 * w0 / 12.0) / pi;
  const Tail tail = pair_tail(delta.terms(), quad.omega_max, 0.0);
  est.budget.tail_correction = tail.correction;
  est.budget.tail_bound = tail.bound;
  est.budget.panel_estimate = body.error_estimate / pi;
  est.squared = body.value / pi + est.budget.inner_correction +
                est.budget.tail_correction;
  finish(est);
  return est;
}

SpectralEstimate reg_distance_quadrature(const AtomicDistribution &p1,
                                         const AtomicDistribution &p2,
                                         const EpsGeometry &geom,
                                         const QuadratureSpec &quad) {
  quad.validate();
  const SignedExpSum delta = characteristic_sum(p1) - characteristic_sum(p2);
  SpectralEstimate est;
  if (delta.is_zero()) {
    return est;
  }
  const double eps = geom.epsilon();
  const PanelIntegrator integrator(quad.nodes_per_panel, quad.panels_per_decade);
  const auto integrand = [&delta, eps](double omega) {
    return std::norm(delta(omega)) / (omega * omega + eps);
  };
  const double start = quad.omega_min > 0.0 ? quad.omega_min : 1e-6;
  const QuadratureResult body = integrator.integrate(
      integrand, start, quad.omega_max, delta.spread(), /*include_origin=*/true);
  const Tail tail = pair_tail(delta.terms(), quad.omega_max, eps);
  est.budget.tail_correction = tail.correction;
  est.budget.tail_bound = tail.bound;
  est.budget.panel_estimate = body.error_estimate / pi;
  est.squared = body.value / pi + est.budget.tail_correction;
  finish(est);
  return est;
}

SpectralEstimate hcdf_norm_quadrature(const CdfDifference &h,
                                      const EpsGeometry &geom,
                                      const QuadratureSpec &quad) {
  quad.validate();
  SpectralEstimate est;
  const auto segments = h.segments();
  if (segments.empty()) {
    return est;
  }
  struct Piece {
    double value_width;
    double half_width;
    double midpoint;
  };
  std::vector<Piece> pieces;
  for (const auto &seg : segments) {
    if (seg.value != 0.0) {
      pieces.push_back({seg.value * (seg.right - seg.left),
                        0.5 * (seg.right - seg.left),
                        0.5 * (seg.left + seg.right)});
    }
  }
  if (pieces.empty()) {
    return est;
  }
  const double eps = geom.epsilon();
  // Transform of a constant piece: value * width * sinc(omega w / 2) e^{-i omega m}.
  const auto transform = [&pieces](double omega) {
    double re = 0.0;
    double im = 0.0;
    for (const Piece &p : pieces) {
      const double arg = omega * p.half_width;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
      const double amp = p.value_width * sinc;
      re += amp * std::cos(omega * p.midpoint);
      im -= amp * std::sin(omega * p.midpoint);
    }
    return std::complex<double>(re, im) / kSqrtTwoPi;
  };
  const auto integrand = [&transform, eps](double omega) {
    const double w2 = omega * omega;
    return w2 / (w2 + eps) * std::norm(transform(omega));
  };
  const double spread = segments.back().right - segments.front().left;
  const PanelIntegrator integrator(quad.nodes_per_panel, quad.panels_per_decade);
  const double start = quad.omega_min > 0.0 ? quad.omega_min : 1e-6;
  const QuadratureResult body = integrator.integrate(
      integrand, start, quad.omega_max, spread, /*include_origin=*/true);

  // Jumps of H read off consecutive segment values.
  std::vector<ExpTerm> jumps;
  double previous = 0.0;
  for (const auto &seg : segments) {
    jumps.push_back({seg.left, seg.value - previous});
    previous = seg.value;
  }
  jumps.push_back({segments.back().right, -previous});
  const SignedExpSum envelope = SignedExpSum::from_terms(std::move(jumps));
  // Beyond omega_max the integrand is (1/2pi) |sum J e^{-i w x}|^2 / (w^2 + eps)
  // exactly, so twice its tail is the same pair sum as for laws.
  const Tail tail = pair_tail(envelope.terms(), quad.omega_max, eps);
  est.budget.tail_correction = tail.correction;
  est.budget.tail_bound = tail.bound;
  est.budget.panel_estimate = 2.0 * body.error_estimate;
  est.squared = 2.0 * body.value + est.budget.tail_correction;
  finish(est);
  return est;
}

SignedExpSum transport_U(const CdfDifference &h) {
  std::vector<ExpTerm> terms;
  terms.reserve(h.jumps().size());
  for (const Atom &j : h.jumps()) {
    terms.push_back({j.location, j.weight});
  }
  return SignedExpSum::from_terms(std::move(terms));
}

CdfDifference transport_U_inv(const SignedExpSum &f) {
  std::vector<Atom> jumps;
  jumps.reserve(f.size());
  for (const ExpTerm &t : f.terms()) {
    jumps.push_back({t.location, t.coefficient});
  }
  return CdfDifference::from_jumps(std::move(jumps));
}

SignedExpSum transport_V(const AtomicDistribution &dist) {
  return transport_U(centre(dist));
}

AtomicDistribution transport_V_inv(const SignedExpSum &f) {
  if (std::abs(f.coefficient_sum()) > 1e-12) {
    throw std::invalid_argument(
        "V^-1: coefficients do not sum to zero; not an embedded law");
  }
  return uncentre(transport_U_inv(f));
}

SpectralField lift_V(const ReturnField &field) {
  std::vector<SignedExpSum> entries;
  entries.reserve(field.size());
  for (const auto &d : field.entries()) {
    entries.push_back(transport_V(d));
  }
  return SpectralField(field.n_states(), field.n_actions(), std::move(entries));
}

ReturnField lift_V_inv(const SpectralField &field) {
  std::vector<AtomicDistribution> entries;
  entries.reserve(field.size());
  for (const auto &mu : field.entries()) {
    entries.push_back(transport_V_inv(mu));
  }
  return ReturnField(field.n_states(), field.n_actions(), std::move(entries));
}

SpectralField spectral_bellman_apply(const SpectralField &mu, const FiniteMdp &mdp,
                                     const Policy &policy,
                                     const BellmanConfig &config) {
  return lift_V(bellman_apply(lift_V_inv(mu), mdp, policy, config));
}

SpectralField spectral_bellman_apply_direct(const SpectralField &mu,
                                            const FiniteMdp &mdp,
                                            const Policy &policy) {
  check_compatible(mdp, policy);
  if (mu.n_states() != mdp.n_states() || mu.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("spectral field shape does not match the mdp");
  }
  const double gamma = mdp.gamma();
  // phi = mu + 1 for every successor entry.
  std::vector<SignedExpSum> phis;
  phis.reserve(mu.size());
  for (const auto &entry : mu.entries()) {
    phis.push_back(entry + SignedExpSum::from_terms({{0.0, 1.0}}));
  }
  std::vector<SignedExpSum> out;
  out.reserve(mu.size());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      std::vector<ExpTerm> terms;
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
            // e^{i omega r} phi(gamma omega): every term moves to r + gamma y.
            for (const ExpTerm &t : phis[next * mdp.n_actions() + b].terms()) {
              terms.push_back({r.location + gamma * t.location, w * t.coefficient});
            }
          }
        }
      }
      terms.push_back({0.0, -1.0});
      out.push_back(SignedExpSum::from_terms(std::move(terms)));
    }
  }
  return SpectralField(mu.n_states(), mu.n_actions(), std::move(out));
}

double induced_field_distance(const SpectralField &mu1, const SpectralField &mu2) {
  return field_distance(lift_V_inv(mu1), lift_V_inv(mu2));
}

double reg_field_distance(const SpectralField &mu1, const SpectralField &mu2,
                          const EpsGeometry &geom) {
  if (!mu1.same_shape(mu2)) {
    throw std::invalid_argument("reg_field_distance: shape mismatch");
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    sup = std::max(sup, h_eps_norm(mu1[i] - mu2[i], geom));
  }
  return sup;
}

std::vector<SweepRow> eps_sweep(const AtomicDistribution &p1,
                                const AtomicDistribution &p2,
                                std::span<const double> eps_list) {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) {
      throw std::invalid_argument("eps_sweep: epsilon values must be positive");
    }
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw std::invalid_argument("eps_sweep: epsilon list must be strictly decreasing");
    }
  }
  const double exact = cramer_distance(p1, p2);
  std::vector<SweepRow> rows;
  rows.reserve(eps_list.size());
  for (double eps : eps_list) {
    const double d = reg_distance(p1, p2, EpsGeometry(eps));
    const bool monotone = rows.empty() || d >= rows.back().reg_distance;
    rows.push_back({eps, d, exact, exact - d, monotone});
  }
  return rows;
}

std::vector<double> default_eps_list() {
  std::vector<double> list;
  for (int k = 0; k <= 8; ++k) {
    list.push_back(std::pow(10.0, -k));
  }
  return list;
}

} // namespace cramer
