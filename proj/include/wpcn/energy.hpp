#pragma once

#include <cmath>

#include "wpcn/errors.hpp"
#include "wpcn/numerics.hpp"
#include "wpcn/params.hpp"

namespace wpcn::energy {

// Distribution of the energy a node harvests in one frame from the whole
// field of access points over n_dl downlink slots. Heavy tailed: the mean
// is infinite, so everything downstream works with the Laplace transform,
// the tail probability, or quantile sampling, never with moments.
struct EnergyDistribution {
  NetworkParams params;
  int n_dl = 1;
  // Tail coefficient of the alpha = 4 closed form P(Z > z) = erf(c / sqrt(z)).
  double c_coeff = 0.0;
};

inline EnergyDistribution make_energy_distribution(const NetworkParams& params, int n_dl) {
  params.validate();
  if (n_dl < 1 || n_dl >= params.t_slots) {
    throw domain_error("energy: n_dl must lie in [1, t_slots - 1]");
  }
  EnergyDistribution dist;
  dist.params = params;
  dist.n_dl = n_dl;
  const double ratio = numerics::gamma_ratio(n_dl, params.alpha);
  dist.c_coeff = 0.5 * params.lambda_ap * ratio *
                 std::sqrt(numerics::pi * numerics::pi * numerics::pi * params.p_d * params.eta);
  return dist;
}

/// Laplace transform E[exp(-s Z)] of the harvested energy, any alpha > 2.
inline double laplace_zf(const EnergyDistribution& dist, double s) {
  if (!(s >= 0.0)) throw domain_error("laplace_zf: s must be nonnegative");
  if (s == 0.0) return 1.0;
  const auto& p = dist.params;
  const double two_over_alpha = 2.0 / p.alpha;
  const double exponent = numerics::pi * p.lambda_ap *
                          numerics::gamma_ratio(dist.n_dl, p.alpha) *
                          std::tgamma(1.0 - two_over_alpha) *
                          std::pow(p.p_d * p.eta * s, two_over_alpha);
  return std::exp(-exponent);
}

namespace detail {

inline void require_alpha4(const EnergyDistribution& dist, const char* what) {
  if (dist.params.alpha != 4.0) {
    throw unsupported_alpha(std::string(what) + ": closed form exists only for alpha = 4");
  }
}

}  // namespace detail

/// Tail probability P(Z > z) = erf(c / sqrt(z)); alpha = 4 only.
inline double ccdf_zf(const EnergyDistribution& dist, double z) {
  detail::require_alpha4(dist, "ccdf_zf");
  if (!(z >= 0.0)) throw domain_error("ccdf_zf: z must be nonnegative");
  if (z == 0.0) return 1.0;
  return std::erf(dist.c_coeff / std::sqrt(z));
}

/// Quantile sampling through the exact inverse of the tail: for u in (0, 1),
/// returns the z with P(Z > z) = u; alpha = 4 only.
inline double sample_zf(const EnergyDistribution& dist, double u) {
  detail::require_alpha4(dist, "sample_zf");
  if (!(u > 0.0 && u < 1.0)) throw domain_error("sample_zf: u must lie in (0, 1)");
  const double t = dist.c_coeff / numerics::erfinv(u);
  return t * t;
}

/// Transmission probability of a battery-free node that needs p_u in a
/// single frame's harvest, clipped to exactly 1 once the tail saturates.
inline double rho_free(const EnergyDistribution& dist, double p_u,
                       const numerics::ErfClipConfig& cfg = numerics::default_clip_config()) {
  detail::require_alpha4(dist, "rho_free");
  if (!(p_u > 0.0)) throw domain_error("rho_free: p_u must be positive");
  return numerics::clipped_erf(dist.c_coeff / std::sqrt(p_u), cfg);
}

/// Chernoff decay rate Q of the battery underflow bound: the positive
/// solution of k * Q^(2/alpha) = Q * p_u with k the Laplace exponent
/// coefficient, i.e. Q = (k / p_u)^(alpha / (alpha - 2)).
inline double chernoff_exponent(const EnergyDistribution& dist, double p_u) {
  if (!(p_u > 0.0)) throw domain_error("chernoff_exponent: p_u must be positive");
  const auto& p = dist.params;
  const double two_over_alpha = 2.0 / p.alpha;
  const double k = numerics::pi * p.lambda_ap *
                   numerics::gamma_ratio(dist.n_dl, p.alpha) *
                   std::tgamma(1.0 - two_over_alpha) *
                   std::pow(p.p_d * p.eta, two_over_alpha);
  return std::pow(k / p_u, p.alpha / (p.alpha - 2.0));
}

}  // namespace wpcn::energy
