#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/params.hpp"
#include "wpcn/rng.hpp"
#include "wpcn/uplink.hpp"

// Monte Carlo engine: point process generation, mobility displacement, and
// frame-level harvest/transmit experiments used to cross-validate the
// analytical formulas. Every experiment draws from per-frame random streams
// derived from one master seed, so results are bit-reproducible and frames
// could be evaluated in any order.
namespace wpcn::sim {

/// Which population is redrawn between frames. Relocating either side of the
/// network refreshes the relative geometry; the two choices give the typical
/// node statistically identical harvest and uplink statistics.
enum class Mobility { nodes_move, aps_move };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using PointSet = std::vector<Point>;

struct SimConfig {
  double window_side = 1000.0;  // meters; full simulation square
  double interim_side = 100.0;  // meters; central sampling sub-square
  int frames = 4000;            // frame realizations to average over
  std::uint64_t seed = 0;
  Mobility mobility = Mobility::nodes_move;
  battery::BatteryMode mode = battery::BatteryMode::make_free();
  bool fast_harvest = false;  // draw energies from the closed tail law
                              // instead of placing access points
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.window_side > 0.0)) {
    throw domain_error("sim: window_side must be positive");
  }
  if (!(cfg.interim_side > 0.0 && cfg.interim_side < cfg.window_side)) {
    throw domain_error("sim: interim_side must lie in (0, window_side)");
  }
  if (cfg.frames < 1) throw domain_error("sim: frames must be at least 1");
}

namespace detail {

// Addressable child streams. The op tag keeps different experiments off each
// other's draws; frame index 0 is reserved for populations that persist
// across the whole run.
inline rng::Xoshiro256ss stream(std::uint64_t seed, std::uint64_t op,
                                std::uint64_t frame, std::uint64_t lane) {
  return rng::Xoshiro256ss(rng::derive_seed(seed, frame, lane, op));
}

constexpr std::uint64_t op_battery = 1;
constexpr std::uint64_t op_gap = 2;
constexpr std::uint64_t op_void = 3;
constexpr std::uint64_t op_psuc = 4;

// Least separation used in path loss; keeps the simulated energy integrable
// while perturbing only events of vanishing probability.
constexpr double min_distance = 0.1;

inline Point uniform_point(rng::Xoshiro256ss& gen, double lo, double hi) {
  return {gen.uniform(lo, hi), gen.uniform(lo, hi)};
}

/// Corner offset of the centered square of side `inner` inside `outer`.
inline double centered_lo(double outer, double inner) {
  return 0.5 * (outer - inner);
}

inline bool inside_centered_square(const Point& p, double window_side,
                                   double l) {
  const double lo = centered_lo(window_side, l);
  const double hi = lo + l;
  return p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
}

}  // namespace detail

/// Homogeneous Poisson point process on the [0, side]^2 window.
inline PointSet gen_ppp(rng::Xoshiro256ss& gen, double lambda,
                        double window_side) {
  if (!(lambda > 0.0)) throw domain_error("gen_ppp: lambda must be positive");
  if (!(window_side >= 0.0)) {
    throw domain_error("gen_ppp: window_side must be nonnegative");
  }
  const std::uint64_t count = gen.poisson(lambda * window_side * window_side);
  PointSet points;
  points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    points.push_back(detail::uniform_point(gen, 0.0, window_side));
  }
  return points;
}

/// Uniform relocation of every point; the high-mobility limit of a random
/// walk, which preserves the Poisson law of the set.
inline PointSet displace(const PointSet& points, rng::Xoshiro256ss& gen,
                         double window_side) {
  if (!(window_side >= 0.0)) {
    throw domain_error("displace: window_side must be nonnegative");
  }
  PointSet moved;
  moved.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    moved.push_back(detail::uniform_point(gen, 0.0, window_side));
  }
  return moved;
}

/// Energy a node at `node` harvests in one frame: every access point
/// contributes through path loss, with an independent Erlang-shaped fading
/// sum over the n_dl downlink slots.
inline double harvest_frame(rng::Xoshiro256ss& gen, const Point& node,
                            const PointSet& aps, int n_dl,
                            const NetworkParams& params) {
  if (n_dl < 1) throw domain_error("harvest_frame: n_dl must be at least 1");
  double total = 0.0;
  for (const auto& ap : aps) {
    const double d = std::max(detail::min_distance,
                              std::hypot(ap.x - node.x, ap.y - node.y));
    const double fade_sum = gen.gamma(static_cast<double>(n_dl));
    total += fade_sum * std::pow(d, -params.alpha);
  }
  return params.eta * params.p_d * total;
}

namespace detail {

/// Per-frame harvest draw for the battery recursion. Spatial mode places the
/// populations; fast mode inverts the closed tail law directly.
class HarvestSource {
 public:
  HarvestSource(const SimConfig& cfg, const NetworkParams& params, int n_dl)
      : cfg_(cfg),
        params_(params),
        n_dl_(n_dl),
        dist_(energy::make_energy_distribution(params, n_dl)) {
    if (!cfg.fast_harvest && cfg.mobility == Mobility::nodes_move) {
      auto field = stream(cfg.seed, op_battery, 0, 0);
      static_aps_ = gen_ppp(field, params.lambda_ap, cfg.window_side);
    }
    if (!cfg.fast_harvest && cfg.mobility == Mobility::aps_move) {
      fixed_node_ = {0.5 * cfg.window_side, 0.5 * cfg.window_side};
    }
  }

  double draw(int frame) {
    const auto f = static_cast<std::uint64_t>(frame) + 1;
    if (cfg_.fast_harvest) {
      auto gen = stream(cfg_.seed, op_battery, f, 1);
      return energy::sample_zf(dist_, gen.uniform_open());
    }
    auto gen = stream(cfg_.seed, op_battery, f, 2);
    if (cfg_.mobility == Mobility::nodes_move) {
      const double lo = centered_lo(cfg_.window_side, cfg_.interim_side);
      const Point node = uniform_point(gen, lo, lo + cfg_.interim_side);
      return harvest_frame(gen, node, static_aps_, n_dl_, params_);
    }
    const PointSet aps = gen_ppp(gen, params_.lambda_ap, cfg_.window_side);
    return harvest_frame(gen, fixed_node_, aps, n_dl_, params_);
  }

 private:
  const SimConfig& cfg_;
  const NetworkParams& params_;
  int n_dl_;
  energy::EnergyDistribution dist_;
  PointSet static_aps_;
  Point fixed_node_;
};

}  // namespace detail

/// Empirical transmission probability from the frame-by-frame battery
/// recursion. Without storage a frame transmits when its own harvest covers
/// the power draw; with storage the level carries over, capped at the
/// capacity when one is set. The indicator is evaluated on the post-update
/// level, matching the stationary quantity the chain models.
inline double run_battery_frames(const SimConfig& cfg,
                                 const NetworkParams& params, int n_dl,
                                 double p_u) {
  validate(cfg);
  if (n_dl < 1 || n_dl > params.t_slots - 1) {
    throw domain_error("run_battery_frames: n_dl out of range");
  }
  if (!(p_u > 0.0)) {
    throw domain_error("run_battery_frames: p_u must be positive");
  }
  using Kind = battery::BatteryMode::Kind;
  if (cfg.mode.kind == Kind::finite && !(cfg.mode.capacity >= p_u)) {
    throw domain_error("run_battery_frames: capacity below transmit power");
  }

  detail::HarvestSource source(cfg, params, n_dl);
  std::uint64_t transmissions = 0;
  double level = 0.0;
  for (int f = 0; f < cfg.frames; ++f) {
    const double z = source.draw(f);
    switch (cfg.mode.kind) {
      case Kind::free:
        if (z >= p_u) ++transmissions;
        break;
      case Kind::finite:
        level = std::min(level - p_u * (level >= p_u ? 1.0 : 0.0) + z,
                         cfg.mode.capacity);
        if (level >= p_u) ++transmissions;
        break;
      case Kind::infinite:
        level = level - p_u * (level >= p_u ? 1.0 : 0.0) + z;
        if (level >= p_u) ++transmissions;
        break;
    }
  }
  return static_cast<double>(transmissions) / cfg.frames;
}

struct IndependenceStats {
  double p_first = 0.0;   // marginal odds of the first node covering p_u
  double p_second = 0.0;  // marginal odds of the second node
  double joint = 0.0;     // odds of both covering p_u in the same frame
  double gap() const { return std::abs(p_first * p_second - joint); }
};

/// Dependence between the frame energies of two tagged nodes sharing one
/// access point field: marginals and joint odds of each node covering the
/// transmit power. The field is redrawn every frame so the estimate targets
/// the ensemble joint law; the mobility choice controls whether the tagged
/// pair relocates (nodes_move) or stays put (aps_move).
inline IndependenceStats independence_stats(const SimConfig& cfg,
                                            const NetworkParams& params,
                                            int n_dl, double p_u) {
  validate(cfg);
  if (!(p_u > 0.0)) {
    throw domain_error("independence_stats: p_u must be positive");
  }
  const double lo = detail::centered_lo(cfg.window_side, cfg.interim_side);
  const double hi = lo + cfg.interim_side;

  Point first;
  Point second;
  if (cfg.mobility == Mobility::aps_move) {
    auto init = detail::stream(cfg.seed, detail::op_gap, 0, 0);
    first = detail::uniform_point(init, lo, hi);
    second = detail::uniform_point(init, lo, hi);
  }

  std::uint64_t c_first = 0;
  std::uint64_t c_second = 0;
  std::uint64_t c_both = 0;
  for (int f = 0; f < cfg.frames; ++f) {
    const auto fr = static_cast<std::uint64_t>(f) + 1;
    auto field = detail::stream(cfg.seed, detail::op_gap, fr, 1);
    const PointSet aps = gen_ppp(field, params.lambda_ap, cfg.window_side);
    if (cfg.mobility == Mobility::nodes_move) {
      auto place = detail::stream(cfg.seed, detail::op_gap, fr, 2);
      first = detail::uniform_point(place, lo, hi);
      second = detail::uniform_point(place, lo, hi);
    }
    auto fade_first = detail::stream(cfg.seed, detail::op_gap, fr, 3);
    auto fade_second = detail::stream(cfg.seed, detail::op_gap, fr, 4);
    const bool a = harvest_frame(fade_first, first, aps, n_dl, params) >= p_u;
    const bool b =
        harvest_frame(fade_second, second, aps, n_dl, params) >= p_u;
    c_first += a ? 1 : 0;
    c_second += b ? 1 : 0;
    c_both += (a && b) ? 1 : 0;
  }
  const double n = static_cast<double>(cfg.frames);
  IndependenceStats stats;
  stats.p_first = c_first / n;
  stats.p_second = c_second / n;
  stats.joint = c_both / n;
  return stats;
}

/// Absolute difference between the marginal product and the joint odds.
inline double independence_gap(const SimConfig& cfg,
                               const NetworkParams& params, int n_dl,
                               double p_u) {
  return independence_stats(cfg, params, n_dl, p_u).gap();
}

struct VoidPoint {
  double l = 0.0;       // side of the probed square, meters
  double empirical = 0.0;
  double analytic = 0.0;
};

/// Probability that no node transmits inside a centered square in one uplink
/// slot, against the closed form for an independently thinned process. Nodes
/// transmit when their own frame harvest covers the power draw and their
/// schedule lands on the observed slot.
inline std::vector<VoidPoint> void_probability(const SimConfig& cfg,
                                               const NetworkParams& params,
                                               int n_dl, double p_u,
                                               const std::vector<double>& l_grid) {
  validate(cfg);
  if (cfg.mode.kind != battery::BatteryMode::Kind::free) {
    throw domain_error("void_probability: storage-free transmission only");
  }
  if (l_grid.empty()) {
    throw domain_error("void_probability: l_grid must be nonempty");
  }
  double l_max = 0.0;
  for (const double l : l_grid) {
    if (!(l > 0.0 && l <= cfg.interim_side)) {
      throw domain_error("void_probability: l outside (0, interim_side]");
    }
    l_max = std::max(l_max, l);
  }
  if (n_dl < 1 || n_dl > params.t_slots - 1) {
    throw domain_error("void_probability: n_dl out of range");
  }

  const auto dist = energy::make_energy_distribution(params, n_dl);
  const double rho = energy::rho_free(dist, p_u);
  const double lambda_a =
      uplink::active_density(params.lambda_w, rho, params.t_slots, n_dl);
  const double slot_share = 1.0 / (params.t_slots - n_dl);

  // Only nodes inside the largest probed square can break a void there, so
  // the node process is drawn on that square alone.
  const double lo = detail::centered_lo(cfg.window_side, l_max);
  std::vector<std::uint64_t> voids(l_grid.size(), 0);
  for (int f = 0; f < cfg.frames; ++f) {
    const auto fr = static_cast<std::uint64_t>(f) + 1;
    auto field = detail::stream(cfg.seed, detail::op_void, fr, 0);
    const PointSet aps = gen_ppp(field, params.lambda_ap, cfg.window_side);
    auto nodes_gen = detail::stream(cfg.seed, detail::op_void, fr, 1);
    auto draw = detail::stream(cfg.seed, detail::op_void, fr, 2);
    const std::uint64_t count =
        nodes_gen.poisson(params.lambda_w * l_max * l_max);
    PointSet actives;
    for (std::uint64_t i = 0; i < count; ++i) {
      const Point node = detail::uniform_point(nodes_gen, lo, lo + l_max);
      const bool charged =
          harvest_frame(draw, node, aps, n_dl, params) >= p_u;
      const bool scheduled = draw.uniform01() < slot_share;
      if (charged && scheduled) actives.push_back(node);
    }
    for (std::size_t i = 0; i < l_grid.size(); ++i) {
      bool empty = true;
      for (const auto& a : actives) {
        if (detail::inside_centered_square(a, cfg.window_side, l_grid[i])) {
          empty = false;
          break;
        }
      }
      if (empty) ++voids[i];
    }
  }

  std::vector<VoidPoint> out(l_grid.size());
  for (std::size_t i = 0; i < l_grid.size(); ++i) {
    out[i].l = l_grid[i];
    out[i].empirical = static_cast<double>(voids[i]) / cfg.frames;
    out[i].analytic = std::exp(-lambda_a * l_grid[i] * l_grid[i]);
  }
  return out;
}

/// Empirical uplink success probability for the typical node: actives form
/// an independent process at the thinned density, the node is decoded at its
/// nearest access point, and one slot's SINR is compared to the threshold.
inline double empirical_psuc(const SimConfig& cfg, const NetworkParams& params,
                             double rho, int n_dl, double p_u) {
  validate(cfg);
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw domain_error("empirical_psuc: rho outside [0, 1]");
  }
  if (n_dl < 1 || n_dl > params.t_slots - 1) {
    throw domain_error("empirical_psuc: n_dl out of range");
  }
  if (!(p_u > 0.0)) throw domain_error("empirical_psuc: p_u must be positive");

  const double lambda_a =
      uplink::active_density(params.lambda_w, rho, params.t_slots, n_dl);
  const Point node = {0.5 * cfg.window_side, 0.5 * cfg.window_side};

  std::uint64_t successes = 0;
  for (int f = 0; f < cfg.frames; ++f) {
    const auto fr = static_cast<std::uint64_t>(f) + 1;
    auto field = detail::stream(cfg.seed, detail::op_psuc, fr, 0);
    const PointSet aps = gen_ppp(field, params.lambda_ap, cfg.window_side);
    if (aps.empty()) continue;

    double best = std::numeric_limits<double>::infinity();
    Point home;
    for (const auto& ap : aps) {
      const double d = std::hypot(ap.x - node.x, ap.y - node.y);
      if (d < best) {
        best = d;
        home = ap;
      }
    }

    auto fade = detail::stream(cfg.seed, detail::op_psuc, fr, 1);
    const double r = std::max(detail::min_distance, best);
    const double signal =
        p_u * fade.exponential() * std::pow(r, -params.alpha);

    double interference = 0.0;
    if (lambda_a > 0.0) {
      auto others = detail::stream(cfg.seed, detail::op_psuc, fr, 2);
      const PointSet actives = gen_ppp(others, lambda_a, cfg.window_side);
      for (const auto& tx : actives) {
        const double d = std::max(detail::min_distance,
                                  std::hypot(tx.x - home.x, tx.y - home.y));
        interference +=
            p_u * fade.exponential() * std::pow(d, -params.alpha);
      }
    }
    if (signal >= params.beta * (interference + params.sigma2)) ++successes;
  }
  return static_cast<double>(successes) / cfg.frames;
}

}  // namespace wpcn::sim
