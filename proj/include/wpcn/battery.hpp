#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "wpcn/energy.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/numerics.hpp"
#include "wpcn/params.hpp"

namespace wpcn::battery {

// Storage discipline at the node.
struct BatteryMode {
  enum class Kind { free, finite, infinite };
  Kind kind = Kind::free;
  double capacity = 0.0;  // meaningful only for finite storage

  static BatteryMode make_free() { return {Kind::free, 0.0}; }
  static BatteryMode make_finite(double capacity) {
    if (!(capacity > 0.0)) throw domain_error("battery: capacity must be positive");
    return {Kind::finite, capacity};
  }
  static BatteryMode make_infinite() { return {Kind::infinite, 0.0}; }
};

struct MarkovOptions {
  int state_cap = 20001;   // hard bound on the number of chain states
  int dense_limit = 2000;  // direct dense solve up to this many states
};

// Quantized battery-level chain. State i holds i*delta joules; a frame
// subtracts u_idx steps when the level covers a transmission and adds the
// quantized harvest, saturating at v_idx.
//
// The kernel is a shifted copy of one arrival pmf per row, so the chain is
// stored in that compressed form; `transition` is materialized only for
// small chains (or when a test constructs a spec from an explicit matrix).
struct MarkovSpec {
  double delta = 0.0;
  int u_idx = 0;
  int v_idx = 0;
  std::vector<double> arrival_pmf;   // q[k] = ccdf(k d) - ccdf((k+1) d), k < v_idx
  std::vector<double> arrival_tail;  // tail[k] = ccdf(k d), k <= v_idx
  std::vector<double> transition;    // row-major (v_idx+1)^2 when materialized
  std::vector<double> stationary;    // filled by steady_state
  bool unique_stationary = true;

  int n_states() const { return v_idx + 1; }

  // Start state of the shift for row i: transmit first when charged.
  int shift_of(int i) const { return i >= u_idx ? i - u_idx : i; }

  double transition_prob(int i, int j) const {
    const int n = n_states();
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw domain_error("markov: state index out of range");
    }
    if (arrival_pmf.empty()) {
      return transition[static_cast<std::size_t>(i) * n + j];
    }
    const int g = shift_of(i);
    if (j == v_idx) return arrival_tail[v_idx - g];
    const int k = j - g;
    return k < 0 ? 0.0 : arrival_pmf[k];
  }

  void materialize_dense() {
    const std::size_t n = static_cast<std::size_t>(n_states());
    transition.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        transition[i * n + j] = transition_prob(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
};

/// Quantize an arrival distribution (given by its tail ccdf) into the
/// battery-level chain for transmit power p_u and capacity `capacity`.
inline MarkovSpec build_chain(const std::function<double(double)>& ccdf, double p_u,
                              double capacity, double delta,
                              const MarkovOptions& opts = {}) {
  if (!(p_u > 0.0)) throw domain_error("build_chain: p_u must be positive");
  if (!(capacity > 0.0)) throw domain_error("build_chain: capacity must be positive");
  if (!(delta > 0.0)) throw domain_error("build_chain: delta must be positive");

  MarkovSpec spec;
  spec.delta = delta;
  // One-ulp guards keep exact real-valued ratios from straddling the floor
  // and ceiling thresholds after division noise.
  spec.u_idx = static_cast<int>(std::ceil(p_u / delta - 1e-9));
  const double v_real = capacity / delta + 1e-9;
  if (v_real > 1e9) throw resource_error("build_chain: state count overflows the index range");
  spec.v_idx = static_cast<int>(std::floor(v_real));
  if (spec.u_idx < 1) spec.u_idx = 1;
  if (spec.u_idx > spec.v_idx) {
    throw quantization_error("build_chain: transmit power exceeds capacity on this grid");
  }
  if (spec.n_states() > opts.state_cap) {
    throw resource_error("build_chain: state count exceeds the configured cap");
  }

  spec.arrival_tail.resize(spec.v_idx + 1);
  spec.arrival_tail[0] = 1.0;  // arrivals are nonnegative by construction
  for (int k = 1; k <= spec.v_idx; ++k) {
    spec.arrival_tail[k] = ccdf(k * delta);
  }
  spec.arrival_pmf.resize(spec.v_idx);
  for (int k = 0; k < spec.v_idx; ++k) {
    spec.arrival_pmf[k] = spec.arrival_tail[k] - spec.arrival_tail[k + 1];
  }
  if (spec.n_states() <= opts.dense_limit) spec.materialize_dense();
  return spec;
}

namespace detail {

// Iterative radix-2 FFT with precomputed twiddles; sized once per chain and
// reused across every operator application of a solve.
struct Fft {
  std::size_t n = 0;
  std::vector<std::size_t> rev;
  std::vector<std::complex<double>> tw;

  explicit Fft(std::size_t min_size) {
    n = 1;
    while (n < min_size) n <<= 1;
    rev.resize(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      rev[i] = j;
    }
    tw.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * numerics::pi * static_cast<double>(k) / static_cast<double>(n);
      tw[k] = {std::cos(ang), std::sin(ang)};
    }
  }

  void transform(std::vector<std::complex<double>>& a, bool inverse) const {
    for (std::size_t i = 0; i < n; ++i) {
      if (i < rev[i]) std::swap(a[i], a[rev[i]]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t step = n / len;
      for (std::size_t block = 0; block < n; block += len) {
        for (std::size_t k = 0; k < half; ++k) {
          std::complex<double> w = tw[k * step];
          if (inverse) w = std::conj(w);
          const auto u = a[block + k];
          const auto v = a[block + k + half] * w;
          a[block + k] = u + v;
          a[block + k + half] = u - v;
        }
      }
    }
    if (inverse) {
      const double scale = 1.0 / static_cast<double>(n);
      for (auto& x : a) x *= scale;
    }
  }
};

// One-frame distribution map x -> xP evaluated through a single linear
// convolution: rows are shifted copies of the arrival pmf, so collapsing
// states with equal shift gives (xP)_j = sum_m w_m q_{j-m} for j < V and
// the saturated column (xP)_V = sum_m w_m tail_{V-m}.
class ChainOperator {
 public:
  explicit ChainOperator(const MarkovSpec& spec)
      : spec_(spec),
        n_(spec.n_states()),
        u_(spec.u_idx),
        v_(spec.v_idx),
        w_len_(std::max(u_, v_ - u_ + 1)),
        fft_(static_cast<std::size_t>(std::max(2, v_ + w_len_))) {
    q_hat_.assign(fft_.n, {0.0, 0.0});
    for (int k = 0; k < v_; ++k) q_hat_[k] = {spec.arrival_pmf[k], 0.0};
    fft_.transform(q_hat_, false);
    scratch_.resize(fft_.n);
  }

  int states() const { return n_; }

  // y = xP over all states.
  void product(const std::vector<double>& x, std::vector<double>& y) const {
    std::fill(scratch_.begin(), scratch_.end(), std::complex<double>{0.0, 0.0});
    double wv = 0.0;  // sum_m w_m tail_{V-m}, accumulated directly
    for (int m = 0; m < w_len_; ++m) {
      double wm = 0.0;
      if (m < u_) wm += x[m];
      if (m + u_ <= v_) wm += x[m + u_];
      scratch_[m] = {wm, 0.0};
      wv += wm * spec_.arrival_tail[v_ - m];
    }
    fft_.transform(scratch_, false);
    for (std::size_t i = 0; i < fft_.n; ++i) scratch_[i] *= q_hat_[i];
    fft_.transform(scratch_, true);
    y.resize(n_);
    for (int j = 0; j < v_; ++j) y[j] = scratch_[j].real();
    y[v_] = wv;
  }

  // z = (I - Ptaboo^T) x where Ptaboo is P with every entry into the top
  // state removed; the regeneration form of the stationary equations.
  void taboo_apply(const std::vector<double>& x, std::vector<double>& z) const {
    product(x, z);
    for (int j = 0; j < v_; ++j) z[j] = x[j] - z[j];
    z[v_] = x[v_];
  }

 private:
  const MarkovSpec& spec_;
  int n_, u_, v_, w_len_;
  Fft fft_;
  std::vector<std::complex<double>> q_hat_;
  mutable std::vector<std::complex<double>> scratch_;
};

inline double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Restarted GMRES specialised to the taboo system (rhs = e_V, x0 = 0).
// Returns false if the residual target was not reached.
inline bool gmres_taboo(const ChainOperator& op, std::vector<double>& x, double tol,
                        int restart = 60, int max_restarts = 40) {
  const int n = op.states();
  restart = std::min(restart, n);
  x.assign(n, 0.0);
  std::vector<double> r(n, 0.0), w(n);
  std::vector<std::vector<double>> v;
  std::vector<double> h((restart + 1) * restart, 0.0);
  std::vector<double> cs(restart), sn(restart), s(restart + 1);

  for (int outer = 0; outer < max_restarts; ++outer) {
    op.taboo_apply(x, r);
    for (int i = 0; i < n; ++i) r[i] = (i == n - 1 ? 1.0 : 0.0) - r[i];
    double beta = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    if (beta <= tol) return true;

    v.assign(1, r);
    for (double& e : v[0]) e /= beta;
    std::fill(s.begin(), s.end(), 0.0);
    s[0] = beta;
    int k = 0;
    for (; k < restart; ++k) {
      op.taboo_apply(v[k], w);
      for (int i = 0; i <= k; ++i) {
        double dot = std::inner_product(w.begin(), w.end(), v[i].begin(), 0.0);
        h[i * restart + k] = dot;
        for (int j = 0; j < n; ++j) w[j] -= dot * v[i][j];
      }
      double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
      h[(k + 1) * restart + k] = norm;
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h[i * restart + k] + sn[i] * h[(i + 1) * restart + k];
        h[(i + 1) * restart + k] =
            -sn[i] * h[i * restart + k] + cs[i] * h[(i + 1) * restart + k];
        h[i * restart + k] = t;
      }
      const double denom = std::hypot(h[k * restart + k], norm);
      if (denom == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = h[k * restart + k] / denom;
        sn[k] = norm / denom;
      }
      h[k * restart + k] = denom;
      s[k + 1] = -sn[k] * s[k];
      s[k] = cs[k] * s[k];
      const bool happy = norm <= 1e-300;
      if (!happy) {
        v.push_back(w);
        for (double& e : v.back()) e /= norm;
      }
      if (std::abs(s[k + 1]) <= tol || happy) {
        ++k;
        break;
      }
    }
    // Back substitution on the k x k triangle, then update x.
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double acc = s[i];
      for (int j = i + 1; j < k; ++j) acc -= h[i * restart + j] * y[j];
      y[i] = acc / h[i * restart + i];
    }
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) x[j] += y[i] * v[i][j];
    }
    op.taboo_apply(x, r);
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = (i == n - 1 ? 1.0 : 0.0) - r[i];
      res += d * d;
    }
    if (std::sqrt(res) <= tol) return true;
  }
  return false;
}

// Guaranteed fallback: the regeneration fixed point mu = e_V + mu Ptaboo
// contracts at 1 - P(jump to the top state), which is positive whenever the
// arrival tail can reach capacity.
inline bool richardson_taboo(const ChainOperator& op, std::vector<double>& x, double tol,
                             int max_iter = 200000) {
  const int n = op.states();
  x.assign(n, 0.0);
  x[n - 1] = 1.0;
  std::vector<double> y(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    op.product(x, y);
    y[n - 1] = 1.0;  // entries into the top state are cut; regeneration source
    double diff = 0.0, norm = 0.0;
    for (int i = 0; i < n; ++i) {
      diff += std::abs(y[i] - x[i]);
      norm += std::abs(y[i]);
    }
    x.swap(y);
    if (diff <= tol * std::max(1.0, norm)) return true;
  }
  return false;
}

// Occupation-measure solve on the compressed representation; normalizes to
// the stationary distribution and verifies the balance residual.
inline std::vector<double> solve_structured(const MarkovSpec& spec) {
  const ChainOperator op(spec);
  const int n = op.states();
  std::vector<double> mu;
  bool ok = gmres_taboo(op, mu, 1e-13);
  if (ok) {
    for (double& e : mu) e = std::max(e, 0.0);
  }
  if (!ok) {
    ok = richardson_taboo(op, mu, 1e-14);
  }
  if (!ok) throw convergence_error("steady_state: stationary solve did not converge");
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  if (!(total > 0.0)) throw convergence_error("steady_state: degenerate occupation measure");
  std::vector<double> pi(n);
  for (int i = 0; i < n; ++i) pi[i] = mu[i] / total;
  std::vector<double> check;
  op.product(pi, check);
  if (l1_diff(check, pi) > 1e-10) {
    throw convergence_error("steady_state: balance residual above tolerance");
  }
  return pi;
}

// Dense stationary solve: LU on the transposed balance system with the
// normalization row substituted in. A singular factorization signals a
// reducible chain; power iteration from the uniform vector then settles on
// one stationary point and the result is flagged non-unique.
inline std::vector<double> solve_dense(const MarkovSpec& spec, bool& unique) {
  const int n = spec.n_states();
  const std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> a(nn * nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a[static_cast<std::size_t>(i) * nn + j] =
          (i == n - 1) ? 1.0 : spec.transition_prob(j, i) - (i == j ? 1.0 : 0.0);
    }
  }
  std::vector<double> x(nn, 0.0);
  x[nn - 1] = 1.0;
  std::vector<int> piv(nn);
  unique = true;
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::abs(a[static_cast<std::size_t>(row) * nn + col]) >
          std::abs(a[static_cast<std::size_t>(best) * nn + col])) {
        best = row;
      }
    }
    if (std::abs(a[static_cast<std::size_t>(best) * nn + col]) < 1e-12) {
      unique = false;
      break;
    }
    if (best != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(a[static_cast<std::size_t>(col) * nn + j],
                  a[static_cast<std::size_t>(best) * nn + j]);
      }
      std::swap(x[col], x[best]);
    }
    const double pivot = a[static_cast<std::size_t>(col) * nn + col];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[static_cast<std::size_t>(row) * nn + col] / pivot;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) {
        a[static_cast<std::size_t>(row) * nn + j] -=
            f * a[static_cast<std::size_t>(col) * nn + j];
      }
      x[row] -= f * x[col];
    }
  }
  if (unique) {
    for (int i = n - 1; i >= 0; --i) {
      double acc = x[i];
      for (int j = i + 1; j < n; ++j) acc -= a[static_cast<std::size_t>(i) * nn + j] * x[j];
      x[i] = acc / a[static_cast<std::size_t>(i) * nn + i];
    }
    double total = 0.0;
    for (double& e : x) {
      e = std::max(e, 0.0);
      total += e;
    }
    for (double& e : x) e /= total;
    return x;
  }

  // Reducible chain: iterate from the uniform vector.
  std::vector<double> pi(nn, 1.0 / n), next(nn);
  for (int iter = 0; iter < 100000; ++iter) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += pi[i] * spec.transition_prob(i, j);
      next[j] = acc;
    }
    const double diff = l1_diff(next, pi);
    pi.swap(next);
    if (diff <= 1e-14) break;
  }
  return pi;
}

}  // namespace detail

/// Stationary distribution of the chain; fills spec.stationary and the
/// uniqueness flag, and returns a reference to the stored vector.
inline const std::vector<double>& steady_state(MarkovSpec& spec,
                                               const MarkovOptions& opts = {}) {
  if (spec.arrival_pmf.empty()) {
    if (spec.transition.empty()) {
      throw domain_error("steady_state: chain has neither kernel nor matrix");
    }
    if (spec.n_states() > opts.dense_limit) {
      throw resource_error("steady_state: dense-only chain exceeds the dense limit");
    }
    spec.stationary = detail::solve_dense(spec, spec.unique_stationary);
    return spec.stationary;
  }
  if (spec.n_states() <= opts.dense_limit) {
    if (spec.transition.empty()) spec.materialize_dense();
    spec.stationary = detail::solve_dense(spec, spec.unique_stationary);
  } else {
    spec.stationary = detail::solve_structured(spec);
    spec.unique_stationary = true;
  }
  return spec.stationary;
}

/// Long-run transmission probability lower bound by quantized chains with
/// successively halved grids, stopping when two rounds agree within theta.
inline double rho_lb_markov(const NetworkParams& params, int n_dl, double p_u,
                            double capacity, double delta0 = 1e-4, double theta = 1e-3,
                            const MarkovOptions& opts = {}) {
  if (!(delta0 > 0.0)) throw domain_error("rho_lb_markov: delta0 must be positive");
  if (!(theta > 0.0)) throw domain_error("rho_lb_markov: theta must be positive");
  const auto dist = energy::make_energy_distribution(params, n_dl);
  const auto ccdf = [&dist](double z) { return energy::ccdf_zf(dist, z); };

  double delta = delta0;
  double rho_prev = 0.0;
  for (int round = 0; round < 40; ++round) {
    delta *= 0.5;
    MarkovSpec spec = build_chain(ccdf, p_u, capacity, delta, opts);
    const std::vector<double> pi = detail::solve_structured(spec);
    double rho = 0.0;
    for (int i = spec.u_idx; i <= spec.v_idx; ++i) rho += pi[i];
    rho = std::min(std::max(rho, 0.0), 1.0);
    if (std::abs(rho - rho_prev) <= theta) return rho;
    rho_prev = rho;
  }
  throw convergence_error("rho_lb_markov: grid refinement did not stabilize");
}

// Closed lower/upper envelope for the finite-battery transmission
// probability: the battery-free tail and the large-deviation underflow
// bound, against the trivial upper bound of one.
struct RhoBounds {
  double erf_lower = 0.0;
  double chernoff_lower = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

inline RhoBounds rho_bounds_closed(const NetworkParams& params, int n_dl, double p_u,
                                   double capacity,
                                   const numerics::ErfClipConfig& cfg =
                                       numerics::default_clip_config()) {
  if (!(capacity > p_u)) {
    throw domain_error("rho_bounds_closed: capacity must exceed the transmit power");
  }
  const auto dist = energy::make_energy_distribution(params, n_dl);
  RhoBounds b;
  b.erf_lower = energy::rho_free(dist, p_u, cfg);
  const double q = energy::chernoff_exponent(dist, p_u);
  b.chernoff_lower = 1.0 - std::exp(-q * (capacity - p_u));
  b.lower = std::max(b.erf_lower, b.chernoff_lower);
  return b;
}

/// True when the AP density already saturates the battery-free tail, i.e.
/// one frame's harvest covers p_u with probability 1 at clip accuracy.
inline bool rho_one_threshold(const NetworkParams& params, int n_dl, double p_u,
                              const numerics::ErfClipConfig& cfg =
                                  numerics::default_clip_config()) {
  const auto dist = energy::make_energy_distribution(params, n_dl);
  if (!(p_u > 0.0)) throw domain_error("rho_one_threshold: p_u must be positive");
  return dist.c_coeff / std::sqrt(p_u) >= cfg.v_e;
}

/// Unbounded storage with infinite-mean arrivals: transmission every frame.
inline double rho_infinite() { return 1.0; }

}  // namespace wpcn::battery
