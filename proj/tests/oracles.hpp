#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately written with different algorithms than the library (long
// double Taylor series, continued fractions, composite Simpson, plain
// bisection) so agreement is evidence, not tautology.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace oracle {

inline long double erfc_cf(long double x);

// Maclaurin series for erf, long double. Converges fast for |x| <= 3.2;
// larger arguments go through the continued fraction for erfc.
inline long double erf_series(long double x) {
  if (x < 0.0L) return -erf_series(-x);
  if (x > 3.2L) return 1.0L - erfc_cf(x);
  const long double two_over_sqrt_pi = 1.12837916709551257389615890312154517L;
  long double term = x;
  long double sum = x;
  for (int k = 1; k <= 200; ++k) {
    term *= -x * x / k;
    const long double add = term / (2 * k + 1);
    sum += add;
    if (std::abs(add) < 1e-24L * std::abs(sum)) break;
  }
  return two_over_sqrt_pi * sum;
}

// Legendre continued fraction for erfc, long double, Lentz evaluation.
// The fraction converges slowly below x ~ 3, where the series is exact
// enough through the 1 - erf complement.
inline long double erfc_cf(long double x) {
  if (x < 3.2L) return 1.0L - erf_series(x);
  const long double inv_sqrt_pi = 0.564189583547756286948079451560772586L;
  const long double tiny = 1e-4000L;
  long double f = x, c = x, d = 0.0L;
  for (int n = 1; n <= 500; ++n) {
    const long double an = 0.5L * n;
    d = x + an * d;
    if (d == 0.0L) d = tiny;
    c = x + an / c;
    if (c == 0.0L) c = tiny;
    d = 1.0L / d;
    const long double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0L) < 1e-24L) break;
  }
  return std::exp(-x * x) * inv_sqrt_pi / f;
}

inline long double gaussian_q_ref(long double x) {
  const long double inv_sqrt2 = 0.707106781186547524400844362104849039L;
  if (x >= 0.0L) return 0.5L * erfc_cf(x * inv_sqrt2);
  return 1.0L - 0.5L * erfc_cf(-x * inv_sqrt2);
}

// Composite Simpson on [a, b] with n panels (n even).
template <class F>
long double simpson(F&& f, long double a, long double b, int n) {
  if (n % 2 != 0) throw std::invalid_argument("simpson: n must be even");
  const long double h = (b - a) / n;
  long double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    sum += f(a + i * h) * (i % 2 == 0 ? 2.0L : 4.0L);
  }
  return sum * h / 3.0L;
}

// Plain bisection, no acceleration, fixed iteration count.
template <class F>
long double bisect(F&& f, long double lo, long double hi, int iters = 200) {
  long double flo = f(lo);
  if (flo == 0.0L) return lo;
  for (int i = 0; i < iters; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double fm = f(mid);
    if (fm == 0.0L) return mid;
    if ((fm > 0.0L) == (flo > 0.0L)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

}  // namespace oracle
