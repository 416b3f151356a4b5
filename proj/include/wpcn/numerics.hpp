#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "wpcn/errors.hpp"

namespace wpcn::numerics {

inline constexpr double pi = std::numbers::pi;

// Shared accuracy/budget knobs for iterative routines.
struct Tolerance {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_iter = 200;
};

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

/// Inverse of erf on (-1, 1), accurate to a few ulp.
///
/// A Winitzki-style initial guess is polished with Newton steps; near the
/// tails the iteration runs on erfc to keep the residual well conditioned.
inline double erfinv(double y) {
  if (!(y > -1.0 && y < 1.0)) {
    throw domain_error("erfinv: argument must lie in (-1, 1)");
  }
  if (y == 0.0) return 0.0;
  const double sign = y < 0.0 ? -1.0 : 1.0;
  const double a = std::abs(y);

  // Initial guess, relative error about 1e-3 over the whole domain.
  constexpr double w = 0.147;
  const double log1my2 = std::log1p(-a * a);
  const double t = 2.0 / (pi * w) + 0.5 * log1my2;
  double x = std::sqrt(std::sqrt(t * t - log1my2 / w) - t);

  constexpr double half_sqrt_pi = 0.8862269254527580137;  // sqrt(pi)/2
  if (a < 0.9375) {
    for (int i = 0; i < 6; ++i) {
      const double step = (std::erf(x) - a) * half_sqrt_pi * std::exp(x * x);
      x -= step;
      if (std::abs(step) <= 1e-17 * (1.0 + std::abs(x))) break;
    }
  } else {
    const double q = 1.0 - a;  // exact: a is within one ulp of 1 at worst
    for (int i = 0; i < 6; ++i) {
      const double step = (std::erfc(x) - q) * half_sqrt_pi * std::exp(x * x);
      x += step;
      if (std::abs(step) <= 1e-17 * (1.0 + std::abs(x))) break;
    }
  }
  return sign * x;
}

namespace detail {

/// Scaled complementary error function exp(y^2) * erfc(y) for y >= 0.
/// Direct evaluation is exact enough until erfc underflows; beyond that a
/// Lentz continued fraction avoids the 0 * inf collapse.
inline double erfcx(double y) {
  if (y < 25.0) return std::exp(y * y) * std::erfc(y);
  // erfc(y) = exp(-y^2)/sqrt(pi) * 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...))))
  const double tiny = 1e-300;
  double f = y, c = y, d = 0.0;
  for (int n = 1; n <= 200; ++n) {
    const double an = 0.5 * n;
    d = y + an * d;
    if (d == 0.0) d = tiny;
    c = y + an / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

}  // namespace detail

inline constexpr double inv_sqrt2 = 0.7071067811865475244;

/// Standard normal upper tail Q(x) = P(X > x).
inline double gaussian_q(double x) { return 0.5 * std::erfc(x * inv_sqrt2); }

/// Scaled tail exp(x^2/2) * Q(x); stays finite where exp(x^2/2) alone
/// overflows, which the uplink closed form needs at strong interference.
inline double gaussian_qe(double x) {
  if (x >= 0.0) return 0.5 * detail::erfcx(x * inv_sqrt2);
  // Reflection: Q(x) = 1 - Q(-x).
  return std::exp(0.5 * x * x) - 0.5 * detail::erfcx(-x * inv_sqrt2);
}

/// Gamma(n + 2/alpha) / Gamma(n) for integer n >= 1, alpha > 2.
inline double gamma_ratio(int n, double alpha) {
  if (n < 1) throw domain_error("gamma_ratio: n must be a positive integer");
  if (!(alpha > 2.0)) throw domain_error("gamma_ratio: alpha must exceed 2");
  return std::exp(std::lgamma(n + 2.0 / alpha) - std::lgamma(n));
}

// erf clipped to exactly 1 beyond the point where 1 - erf drops below
// 10^-n_digits; keeps downstream probability algebra from comparing values
// that differ only in noise below the modeling accuracy.
struct ErfClipConfig {
  int n_digits = 9;
  double v_e = 0.0;  // saturation threshold: erf(v_e) = 1 - 10^-n_digits
};

inline ErfClipConfig make_clip_config(int n_digits = 9) {
  if (n_digits < 1 || n_digits > 15) {
    throw domain_error("make_clip_config: n_digits must be in [1, 15]");
  }
  ErfClipConfig cfg;
  cfg.n_digits = n_digits;
  cfg.v_e = erfinv(1.0 - std::pow(10.0, -n_digits));
  return cfg;
}

inline const ErfClipConfig& default_clip_config() {
  static const ErfClipConfig cfg = make_clip_config(9);
  return cfg;
}

inline double clipped_erf(double x, const ErfClipConfig& cfg = default_clip_config()) {
  return x >= cfg.v_e ? 1.0 : std::erf(x);
}

namespace detail {

// Gauss-7 / Kronrod-15 nodes and weights on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
std::pair<double, double> gauss_kronrod_15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[2 * i] = f(c - h * gk_nodes[i]);
    fv[2 * i + 1] = f(c + h * gk_nodes[i]);
  }
  fv[14] = f(c);
  double kronrod = gk_wk[7] * fv[14];
  double gauss = gk_wg[3] * fv[14];
  for (int i = 0; i < 7; ++i) {
    kronrod += gk_wk[i] * (fv[2 * i] + fv[2 * i + 1]);
    if (i % 2 == 1) gauss += gk_wg[i / 2] * (fv[2 * i] + fv[2 * i + 1]);
  }
  kronrod *= h;
  gauss *= h;
  return {kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integral of f over [0, inf) for integrands that eventually decay.
///
/// The upper limit is truncated where the integrand has fallen below
/// 1e-14 of its running peak (found by doubling), then the finite interval
/// is integrated by adaptive Gauss-Kronrod refinement of the worst segment.
template <class F>
double integrate_semi_infinite(F&& f, Tolerance tol = {.abs_tol = 1e-14, .rel_tol = 1e-10, .max_iter = 2000}) {
  double peak = 0.0;
  for (double probe : {1e-12, 1e-9, 1e-6, 1e-3, 1e-2, 0.1, 0.5, 1.0}) {
    peak = std::max(peak, std::abs(f(probe)));
  }
  double x_cut = 1.0;
  while (true) {
    const double v = std::abs(f(x_cut));
    peak = std::max(peak, v);
    if (v <= 1e-14 * peak && peak > 0.0) break;
    x_cut *= 2.0;
    if (x_cut > 1e300) {
      throw convergence_error("integrate_semi_infinite: integrand does not decay");
    }
  }
  if (peak == 0.0) return 0.0;

  struct Segment {
    double a, b, value, err;
  };
  std::vector<Segment> segs;
  // Seed with a graded split so a sharp feature near the origin is not
  // hidden inside one huge first panel.
  double lo = 0.0;
  for (double hi = std::min(1.0, x_cut); lo < x_cut;
       hi = std::min(x_cut, hi * 16.0)) {
    auto [v, e] = detail::gauss_kronrod_15(f, lo, hi);
    segs.push_back({lo, hi, v, e});
    lo = hi;
    if (hi >= x_cut) break;
  }

  for (int iter = 0; iter < tol.max_iter; ++iter) {
    double total = 0.0, err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].value;
      err += segs[i].err;
      if (segs[i].err > segs[worst].err) worst = i;
    }
    if (err <= std::max(tol.abs_tol, tol.rel_tol * std::abs(total))) {
      return total;
    }
    const Segment s = segs[worst];
    const double mid = 0.5 * (s.a + s.b);
    auto [v1, e1] = detail::gauss_kronrod_15(f, s.a, mid);
    auto [v2, e2] = detail::gauss_kronrod_15(f, mid, s.b);
    segs[worst] = {s.a, mid, v1, e1};
    segs.push_back({mid, s.b, v2, e2});
  }
  throw convergence_error("integrate_semi_infinite: refinement budget exhausted");
}

/// Root of f in [lo, hi], which must bracket a sign change.
///
/// Bisection guarantees progress; a secant step is taken instead whenever it
/// lands strictly inside the bracket. Succeeds when |f| <= abs_tol.
template <class F>
double find_root(F&& f, double lo, double hi, Tolerance tol = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw bracket_error("find_root: endpoints do not bracket a sign change");
  }
  double x = lo, fx = flo;
  for (int iter = 0; iter < tol.max_iter; ++iter) {
    double cand = hi - fhi * (hi - lo) / (fhi - flo);
    const double width = hi - lo;
    if (!std::isfinite(cand) || cand <= lo + 0.01 * width || cand >= hi - 0.01 * width) {
      cand = lo + 0.5 * width;
    }
    x = cand;
    fx = f(x);
    if (std::abs(fx) <= tol.abs_tol) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  throw convergence_error("find_root: iteration budget exhausted");
}

}  // namespace wpcn::numerics
