#pragma once

#include <cmath>

#include "wpcn/errors.hpp"
#include "wpcn/numerics.hpp"
#include "wpcn/params.hpp"

namespace wpcn::uplink {

/// Density of nodes transmitting in one uplink slot: transmitters split
/// evenly across the t_slots - n_dl uplink slots of a frame.
inline double active_density(double lambda_w, double rho, int t_slots, int n_dl) {
  if (!(lambda_w > 0.0)) throw domain_error("active_density: lambda_w must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw domain_error("active_density: rho must lie in [0, 1]");
  if (n_dl < 1 || n_dl >= t_slots) {
    throw domain_error("active_density: n_dl must lie in [1, t_slots - 1]");
  }
  return lambda_w * rho / (t_slots - n_dl);
}

/// Interference scaling constant beta^(2/alpha) * (2 pi / alpha) / sin(2 pi / alpha),
/// the Rayleigh-faded path-loss moment that multiplies the interferer density.
inline double kappa(double beta, double alpha) {
  if (!(beta > 0.0)) throw domain_error("kappa: beta must be positive");
  if (!(alpha > 2.0)) throw domain_error("kappa: alpha must exceed 2");
  const double q = 2.0 * numerics::pi / alpha;
  return std::pow(beta, 2.0 / alpha) * q / std::sin(q);
}

// Intermediate quantities of the uplink success probability, exposed so
// tests and diagnostics can inspect the assembled pieces.
struct PsucTerms {
  double kappa = 0.0;    // interference scaling constant
  double a = 0.0;        // linear exponent coefficient (squared-distance units)
  double b = 0.0;        // noise exponent coefficient beta*sigma2/p_u
  double g_term = 0.0;   // closed-form scale pi^(3/2) lambda_ap sqrt(p_u/(beta sigma2))
  double upsilon = 0.0;  // closed-form tail argument a / sqrt(2 b)
};

inline PsucTerms psuc_terms(const NetworkParams& params, double rho, int n_dl, double p_u) {
  params.validate();
  if (!(p_u > 0.0)) throw domain_error("psuc: p_u must be positive");
  PsucTerms t;
  t.kappa = kappa(params.beta, params.alpha);
  const double lam_a = active_density(params.lambda_w, rho, params.t_slots, n_dl);
  t.a = numerics::pi * (t.kappa * lam_a + params.lambda_ap);
  t.b = params.beta * params.sigma2 / p_u;
  t.g_term = numerics::pi * params.lambda_ap * std::sqrt(numerics::pi / t.b);
  t.upsilon = t.a / std::sqrt(2.0 * t.b);
  return t;
}

/// Success probability of a typical uplink transmission against interference
/// from the active-node field plus receiver noise, by direct quadrature of
/// pi lambda_ap * integral exp(-a x - b x^(alpha/2)) dx. Any alpha > 2.
inline double psuc_general(const NetworkParams& params, double rho, int n_dl, double p_u) {
  const PsucTerms t = psuc_terms(params, rho, n_dl, p_u);
  const double half_alpha = 0.5 * params.alpha;
  const double integral = numerics::integrate_semi_infinite([&](double x) {
    return std::exp(-t.a * x - t.b * std::pow(x, half_alpha));
  });
  return numerics::pi * params.lambda_ap * integral;
}

/// The alpha = 4 closed form G * exp(upsilon^2/2) * Q(upsilon), evaluated in
/// scaled-tail form so strong interference cannot overflow.
inline double psuc_closed4(const NetworkParams& params, double rho, int n_dl, double p_u) {
  if (params.alpha != 4.0) {
    throw unsupported_alpha("psuc_closed4: closed form exists only for alpha = 4");
  }
  const PsucTerms t = psuc_terms(params, rho, n_dl, p_u);
  return t.g_term * numerics::gaussian_qe(t.upsilon);
}

/// Root of g * Q(g / (2 pi)) = (1 - epsilon) * exp(-g^2 / (4 pi)) on [1e-9, 50],
/// the pivot constant of the outage-constraint reduction.
inline double g0_solve(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw domain_error("g0_solve: epsilon must lie in (0, 1)");
  }
  return numerics::find_root(
      [epsilon](double g) {
        return g * numerics::gaussian_q(g / (2.0 * numerics::pi)) -
               (1.0 - epsilon) * std::exp(-g * g / (4.0 * numerics::pi));
      },
      1e-9, 50.0);
}

// Constants that turn the outage-probability requirement into a linear cap
// on the active density plus a minimum transmit power.
struct OutageEquivalence {
  double k_epsilon = 0.0;  // active-density cap coefficient
  double g0 = 0.0;         // pivot constant
  double p_min = 0.0;      // minimum valid transmit power
};

/// Active-density cap coefficient of the linearized outage constraint.
inline double k_epsilon_of(double epsilon, double beta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw domain_error("k_epsilon_of: epsilon must lie in (0, 1)");
  }
  if (!(beta > 0.0)) throw domain_error("k_epsilon_of: beta must be positive");
  return (2.0 * epsilon / (1.0 - epsilon)) / (std::sqrt(beta) * numerics::pi);
}

inline OutageEquivalence outage_equivalence(const NetworkParams& params) {
  params.validate();
  OutageEquivalence eq;
  eq.k_epsilon = k_epsilon_of(params.epsilon, params.beta);
  eq.g0 = g0_solve(params.epsilon);
  const double pi3 = numerics::pi * numerics::pi * numerics::pi;
  eq.p_min = eq.g0 * eq.g0 * params.beta * params.sigma2 /
             (pi3 * params.lambda_ap * params.lambda_ap);
  if (eq.p_min > params.p_max) {
    throw infeasible_error(
        "outage_equivalence: minimum valid transmit power exceeds the power budget");
  }
  return eq;
}

/// Linearized outage constraint: the active density stays under the cap and
/// the transmit power sits inside [p_min, p_max]. Non-strict comparisons, so
/// boundary designs count as feasible.
inline bool constraint_ok(const NetworkParams& params, double rho, int n_dl, double p_u,
                          const OutageEquivalence& eq) {
  const double lam_a = active_density(params.lambda_w, rho, params.t_slots, n_dl);
  return lam_a <= eq.k_epsilon * params.lambda_ap && p_u >= eq.p_min && p_u <= params.p_max;
}

/// Density of the distance from a typical node to its nearest AP.
inline double distance_pdf(double lambda, double r) {
  if (!(lambda > 0.0)) throw domain_error("distance_pdf: lambda must be positive");
  if (!(r >= 0.0)) throw domain_error("distance_pdf: r must be nonnegative");
  return 2.0 * numerics::pi * lambda * r * std::exp(-lambda * numerics::pi * r * r);
}

}  // namespace wpcn::uplink
