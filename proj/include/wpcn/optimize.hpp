#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/numerics.hpp"
#include "wpcn/params.hpp"
#include "wpcn/uplink.hpp"

namespace wpcn::optimize {

// Normalized slot duration; throughput is reported per unit time-bandwidth.
inline constexpr double slot_time = 1.0;

enum class Regime {
  high_density,
  medium_density,
  low_density,
  infinite_battery,
  finite_battery,
};

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::high_density: return "HighDensity";
    case Regime::medium_density: return "MediumDensity";
    case Regime::low_density: return "LowDensity";
    case Regime::infinite_battery: return "InfiniteBattery";
    case Regime::finite_battery: return "FiniteBattery";
  }
  return "Unknown";
}

struct Decision {
  int n_dl = 0;
  double p_u = 0.0;
};

// One slot count with its feasible transmit-power interval.
struct NPowerInterval {
  int n_dl = 0;
  double p_lo = 0.0;
  double p_hi = 0.0;
};

struct OptimizationOutcome {
  bool feasible = false;
  Regime regime = Regime::low_density;
  std::optional<Decision> best;
  double throughput = 0.0;
  double rho_at_best = 0.0;
  std::vector<NPowerInterval> witness_region;
  std::string notes;
};

/// Area spectral efficiency of the network when a fraction rho of the nodes
/// hold enough energy to transmit.
inline double spatial_throughput(double lambda_w, double rho, double beta) {
  if (!(lambda_w > 0.0)) throw domain_error("spatial_throughput: lambda_w must be positive");
  if (!(beta > 0.0)) throw domain_error("spatial_throughput: beta must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw domain_error("spatial_throughput: rho must lie in [0, 1]");
  }
  return slot_time * lambda_w * rho * std::log2(1.0 + beta);
}

/// True when one frame's harvest already covers p_u with probability one at
/// clip accuracy, so the certain-transmission regime is reachable.
inline bool feasibility_rho1(const NetworkParams& params, int n_dl, double p_u,
                             const numerics::ErfClipConfig& cfg =
                                 numerics::default_clip_config()) {
  if (!(p_u > 0.0)) throw domain_error("feasibility_rho1: p_u must be positive");
  const auto dist = energy::make_energy_distribution(params, n_dl);
  energy::detail::require_alpha4(dist, "feasibility_rho1");
  return dist.c_coeff / std::sqrt(p_u) >= cfg.v_e;
}

/// AP-density regime of the outage constraint relative to the node density.
inline Regime density_regime(const NetworkParams& params, double k_epsilon) {
  const double cap_one_slot = k_epsilon * params.lambda_ap;
  if (cap_one_slot >= params.lambda_w) return Regime::high_density;
  if (cap_one_slot * (params.t_slots - 1) >= params.lambda_w) return Regime::medium_density;
  return Regime::low_density;
}

/// Largest slot count keeping the active-density constraint slack at rho = 1
/// in the medium-density regime; unique in {1, ..., T-2}.
inline int n_zero(const NetworkParams& params, double k_epsilon) {
  const auto slack_at = [&](int n) {
    return params.lambda_w <= k_epsilon * params.lambda_ap * (params.t_slots - n);
  };
  const double x = params.lambda_w / (k_epsilon * params.lambda_ap);
  int n0 = static_cast<int>(std::floor(params.t_slots - x));
  n0 = std::max(1, std::min(params.t_slots - 2, n0));
  while (n0 > 1 && !slack_at(n0)) --n0;
  while (n0 + 1 <= params.t_slots - 2 && slack_at(n0 + 1)) ++n0;
  if (!slack_at(n0) || slack_at(n0 + 1)) {
    throw domain_error("n_zero: no slot count satisfies both bracketing inequalities");
  }
  return n0;
}

namespace detail {

struct Candidate {
  int n = 0;
  double p = 0.0;
  double rho = 0.0;
  bool binding = false;
};

inline bool better(const Candidate& a, const Candidate& b) {
  if (a.rho != b.rho) return a.rho > b.rho;
  if (a.p != b.p) return a.p < b.p;
  return a.n < b.n;
}

// Per-N optimum of the battery-free problem. With the power at its floor the
// tail probability is maximal; if that violates the active-density cap, the
// smallest power restoring the cap is the exact constrained optimum for this
// N, and the cap itself is the achieved rho.
inline std::optional<Candidate> free_candidate(const NetworkParams& params,
                                               const uplink::OutageEquivalence& oe,
                                               int n, const numerics::ErfClipConfig& cfg) {
  const auto dist = energy::make_energy_distribution(params, n);
  const double cap_rho =
      oe.k_epsilon * params.lambda_ap * (params.t_slots - n) / params.lambda_w;
  const double rho_floor = energy::rho_free(dist, oe.p_min, cfg);
  if (rho_floor <= cap_rho) {
    return Candidate{n, oe.p_min, rho_floor, false};
  }
  const double root = numerics::erfinv(cap_rho);
  const double p_s = (dist.c_coeff / root) * (dist.c_coeff / root);
  if (p_s > params.p_max) return std::nullopt;
  return Candidate{n, std::max(p_s, oe.p_min), cap_rho, true};
}

}  // namespace detail

/// Exact battery-free design scan: for every slot split the constrained
/// optimum has a closed form, and the best cell over all splits is returned
/// together with the certain-transmission witness region when it exists.
inline OptimizationOutcome optimize_free(const NetworkParams& params,
                                         const numerics::ErfClipConfig& cfg =
                                             numerics::default_clip_config()) {
  params.validate();
  if (params.alpha != 4.0) {
    throw unsupported_alpha("optimize_free: closed forms require alpha = 4");
  }

  OptimizationOutcome out;
  uplink::OutageEquivalence oe;
  try {
    oe = uplink::outage_equivalence(params);
  } catch (const infeasible_error&) {
    out.regime =
        density_regime(params, uplink::k_epsilon_of(params.epsilon, params.beta));
    out.notes = "minimum valid transmit power exceeds the power budget";
    return out;
  }
  out.regime = density_regime(params, oe.k_epsilon);

  std::optional<detail::Candidate> best;
  for (int n = 1; n < params.t_slots; ++n) {
    const auto cand = detail::free_candidate(params, oe, n, cfg);
    if (cand && (!best || detail::better(*cand, *best))) best = cand;
  }

  // Certain-transmission region: slot counts whose active-density cap stays
  // slack at rho = 1 and whose saturation power cap admits the power floor.
  for (int n = 1; n < params.t_slots; ++n) {
    if (params.lambda_w > oe.k_epsilon * params.lambda_ap * (params.t_slots - n)) continue;
    const auto dist = energy::make_energy_distribution(params, n);
    const double sat_cap = (dist.c_coeff / cfg.v_e) * (dist.c_coeff / cfg.v_e);
    if (sat_cap < oe.p_min) continue;
    out.witness_region.push_back({n, oe.p_min, std::min(params.p_max, sat_cap)});
  }

  std::ostringstream notes;
  if (out.regime == Regime::medium_density) {
    notes << "n0=" << n_zero(params, oe.k_epsilon);
  }
  if (best) {
    out.feasible = true;
    out.best = Decision{best->n, best->p};
    out.rho_at_best = best->rho;
    out.throughput = spatial_throughput(params.lambda_w, best->rho, params.beta);
    const int branch_n = out.regime == Regime::high_density ? params.t_slots - 1
                         : out.regime == Regime::medium_density
                             ? n_zero(params, oe.k_epsilon)
                             : best->n;
    if (!out.witness_region.empty()) {
      if (notes.tellp() > 0) notes << "; ";
      notes << "saturated witness rows=" << out.witness_region.size();
    } else if (best->n != branch_n) {
      if (notes.tellp() > 0) notes << "; ";
      notes << "cap-slack rule candidate n=" << branch_n << " superseded by scan n="
            << best->n;
    }
  }
  out.notes = notes.str();
  return out;
}

/// Unbounded-storage design: certain transmission makes every slot split up
/// to the active-density limit optimal at any admissible power.
inline OptimizationOutcome feasible_region_infinite(const NetworkParams& params) {
  params.validate();
  OptimizationOutcome out;
  out.regime = Regime::infinite_battery;
  uplink::OutageEquivalence oe;
  try {
    oe = uplink::outage_equivalence(params);
  } catch (const infeasible_error&) {
    out.notes = "minimum valid transmit power exceeds the power budget";
    return out;
  }

  const auto slack_at = [&](int n) {
    return params.lambda_w <= oe.k_epsilon * params.lambda_ap * (params.t_slots - n);
  };
  const double x = params.lambda_w / (oe.k_epsilon * params.lambda_ap);
  int n_max = std::min(params.t_slots - 1,
                       static_cast<int>(std::floor(params.t_slots - x)));
  while (n_max >= 1 && !slack_at(n_max)) --n_max;
  while (n_max + 1 <= params.t_slots - 1 && slack_at(n_max + 1)) ++n_max;
  if (n_max < 1) {
    out.notes = "active-density cap excludes every slot split";
    return out;
  }

  out.feasible = true;
  for (int n = 1; n <= n_max; ++n) {
    out.witness_region.push_back({n, oe.p_min, params.p_max});
  }
  out.best = Decision{1, oe.p_min};
  out.rho_at_best = 1.0;
  out.throughput = spatial_throughput(params.lambda_w, 1.0, params.beta);
  std::ostringstream notes;
  notes << "slot counts and powers independently selectable; n_max=" << n_max;
  out.notes = notes.str();
  return out;
}

/// Finite-storage certain-transmission region: the unbounded-storage slot
/// range with a per-slot-count power ceiling from the saturation threshold.
inline OptimizationOutcome feasible_region_finite_rho1(
    const NetworkParams& params,
    const numerics::ErfClipConfig& cfg = numerics::default_clip_config()) {
  params.validate();
  if (params.alpha != 4.0) {
    throw unsupported_alpha("feasible_region_finite_rho1: closed forms require alpha = 4");
  }
  OptimizationOutcome out;
  out.regime = Regime::finite_battery;
  const auto region = feasible_region_infinite(params);
  if (!region.feasible) {
    out.notes = region.notes;
    return out;
  }
  const double p_min = region.witness_region.front().p_lo;
  for (const auto& row : region.witness_region) {
    const auto dist = energy::make_energy_distribution(params, row.n_dl);
    const double sat_cap = (dist.c_coeff / cfg.v_e) * (dist.c_coeff / cfg.v_e);
    const double hi = std::min(params.p_max, sat_cap);
    if (hi >= p_min) out.witness_region.push_back({row.n_dl, p_min, hi});
  }
  if (out.witness_region.empty()) {
    out.notes = "saturation power ceiling falls below the power floor for every slot count";
    return out;
  }
  out.feasible = true;
  out.best = Decision{out.witness_region.front().n_dl, p_min};
  out.rho_at_best = 1.0;
  out.throughput = spatial_throughput(params.lambda_w, 1.0, params.beta);
  out.notes = "certain-transmission rectangle per slot count";
  return out;
}

// One evaluated cell of a design-grid scan.
struct GridCell {
  int n_dl = 0;
  double p_u = 0.0;
  double rho = 0.0;
  double throughput = 0.0;
  bool constraint_ok = false;
};

struct GridScan {
  std::vector<GridCell> cells;
  OptimizationOutcome outcome;
};

namespace detail {

inline GridScan grid_scan(const NetworkParams& params, double k_epsilon, double p_lo,
                          int n_power_grid, Regime regime,
                          const std::function<double(int, double)>& rho_of) {
  if (n_power_grid < 1) throw domain_error("grid_scan: power grid needs at least one point");
  if (p_lo > params.p_max) {
    GridScan scan;
    scan.outcome.regime = regime;
    scan.outcome.notes = "power floor exceeds the power budget";
    return scan;
  }
  std::vector<double> grid(static_cast<std::size_t>(n_power_grid));
  if (n_power_grid == 1) {
    grid[0] = p_lo;
  } else {
    const double step = (params.p_max - p_lo) / (n_power_grid - 1);
    for (int i = 0; i < n_power_grid; ++i) grid[i] = p_lo + step * i;
    grid.back() = params.p_max;
  }

  GridScan scan;
  scan.cells.reserve(static_cast<std::size_t>(params.t_slots - 1) * grid.size());
  std::optional<GridCell> best;
  for (int n = 1; n < params.t_slots; ++n) {
    const double cap = k_epsilon * params.lambda_ap * (params.t_slots - n);
    for (const double p : grid) {
      GridCell cell;
      cell.n_dl = n;
      cell.p_u = p;
      try {
        cell.rho = rho_of(n, p);
        cell.constraint_ok = params.lambda_w * cell.rho <= cap;
        cell.throughput = cell.constraint_ok
                              ? spatial_throughput(params.lambda_w, cell.rho, params.beta)
                              : 0.0;
      } catch (const quantization_error&) {
        cell.rho = 0.0;
        cell.constraint_ok = false;
        cell.throughput = 0.0;
      }
      scan.cells.push_back(cell);
      if (cell.throughput > 0.0) {
        const bool wins = !best || cell.throughput > best->throughput ||
                          (cell.throughput == best->throughput &&
                           (cell.p_u < best->p_u ||
                            (cell.p_u == best->p_u && cell.n_dl < best->n_dl)));
        if (wins) best = cell;
      }
    }
  }

  scan.outcome.regime = regime;
  if (best) {
    scan.outcome.feasible = true;
    scan.outcome.best = Decision{best->n_dl, best->p_u};
    scan.outcome.rho_at_best = best->rho;
    scan.outcome.throughput = best->throughput;
  }
  std::ostringstream notes;
  notes << "grid=" << (params.t_slots - 1) << "x" << n_power_grid;
  if (scan.outcome.notes.empty()) scan.outcome.notes = notes.str();
  return scan;
}

}  // namespace detail

struct FiniteScanOptions {
  std::optional<double> p_floor_override;
  battery::MarkovOptions chain;
};

/// Full design-grid evaluation for a finite battery: quantized-chain rho
/// lower bound per cell, zeroed where the active-density cap fails.
inline GridScan scan_finite(const NetworkParams& params, double capacity,
                            int n_power_grid = 200, double delta0 = 1e-4,
                            double theta = 1e-3, const FiniteScanOptions& opts = {}) {
  params.validate();
  if (params.alpha != 4.0) {
    throw unsupported_alpha("scan_finite: the harvest tail requires alpha = 4");
  }
  GridScan empty;
  empty.outcome.regime = Regime::finite_battery;
  uplink::OutageEquivalence oe;
  try {
    oe = uplink::outage_equivalence(params);
  } catch (const infeasible_error&) {
    empty.outcome.notes = "minimum valid transmit power exceeds the power budget";
    return empty;
  }
  const double p_lo = opts.p_floor_override.value_or(oe.p_min);
  if (!(capacity >= p_lo)) {
    throw domain_error("scan_finite: capacity must cover the power floor");
  }
  const auto rho_of = [&params, capacity, delta0, theta, &opts](int n, double p) {
    return battery::rho_lb_markov(params, n, p, capacity, delta0, theta, opts.chain);
  };
  return detail::grid_scan(params, oe.k_epsilon, p_lo, n_power_grid,
                           Regime::finite_battery, rho_of);
}

inline OptimizationOutcome optimize_finite(const NetworkParams& params, double capacity,
                                           int n_power_grid = 200, double delta0 = 1e-4,
                                           double theta = 1e-3,
                                           const FiniteScanOptions& opts = {}) {
  return scan_finite(params, capacity, n_power_grid, delta0, theta, opts).outcome;
}

/// Exhaustive grid reference: evaluates rho by the storage model and the
/// active-density constraint directly, with the same grid and tie order as
/// the scanning optimizers.
inline OptimizationOutcome brute_force_oracle(const NetworkParams& params,
                                              const battery::BatteryMode& mode,
                                              int n_power_grid,
                                              const numerics::ErfClipConfig& cfg =
                                                  numerics::default_clip_config()) {
  params.validate();
  OptimizationOutcome infeasible_out;
  uplink::OutageEquivalence oe;
  try {
    oe = uplink::outage_equivalence(params);
  } catch (const infeasible_error&) {
    const double k_eps = uplink::k_epsilon_of(params.epsilon, params.beta);
    infeasible_out.regime = mode.kind == battery::BatteryMode::Kind::free
                                ? density_regime(params, k_eps)
                                : mode.kind == battery::BatteryMode::Kind::finite
                                      ? Regime::finite_battery
                                      : Regime::infinite_battery;
    infeasible_out.notes = "minimum valid transmit power exceeds the power budget";
    return infeasible_out;
  }

  Regime regime = Regime::infinite_battery;
  std::function<double(int, double)> rho_of;
  switch (mode.kind) {
    case battery::BatteryMode::Kind::free:
      regime = density_regime(params, oe.k_epsilon);
      rho_of = [&params, &cfg](int n, double p) {
        return energy::rho_free(energy::make_energy_distribution(params, n), p, cfg);
      };
      break;
    case battery::BatteryMode::Kind::finite:
      regime = Regime::finite_battery;
      rho_of = [&params, &mode](int n, double p) {
        return battery::rho_lb_markov(params, n, p, mode.capacity);
      };
      break;
    case battery::BatteryMode::Kind::infinite:
      regime = Regime::infinite_battery;
      rho_of = [](int, double) { return battery::rho_infinite(); };
      break;
  }
  return detail::grid_scan(params, oe.k_epsilon, oe.p_min, n_power_grid, regime, rho_of)
      .outcome;
}

}  // namespace wpcn::optimize
