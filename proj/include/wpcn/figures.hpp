#pragma once

#include <string>
#include <vector>

#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/io.hpp"
#include "wpcn/optimize.hpp"
#include "wpcn/simcore.hpp"
#include "wpcn/uplink.hpp"

// Data series behind each figure-style experiment, emitted as CSV tables.
// Sweep grids come from the config's "sweeps" section, with documented
// defaults when a grid is absent.
namespace wpcn::figures {

namespace detail {

inline std::vector<double> tagged_list(const io::ordered_json& sweeps,
                                       const std::string& section,
                                       const std::string& key,
                                       const std::string& unit,
                                       std::vector<double> fallback) {
  if (!sweeps.contains(section) || !sweeps[section].contains(key)) {
    return fallback;
  }
  const auto& node = sweeps[section][key];
  const std::string where = "sweeps." + section + "." + key;
  if (!node.is_object() || !node.contains(unit) || !node[unit].is_array()) {
    throw config_error("config: " + where + " must be {\"" + unit +
                       "\": [..]}");
  }
  std::vector<double> out;
  for (const auto& v : node[unit]) {
    if (!v.is_number()) {
      throw config_error("config: " + where + " entries must be numbers");
    }
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw config_error("config: " + where + " is empty");
  return out;
}

inline std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace detail

struct FigureTable {
  std::string name;  // output file name, e.g. "fig5.csv"
  io::Csv csv;
};

/// Marginal product versus joint transmission-coverage odds for a tagged
/// node pair, swept over access point density for each probe scenario.
inline FigureTable make_fig3(const io::Config& cfg, const std::string& digest) {
  const auto grid = detail::tagged_list(
      cfg.sweeps, "fig3", "lambda_ap_grid", "per_m2",
      {1e-4, 2e-4, 3e-4, 5e-4, 8e-4, 1e-3});

  struct Scenario {
    double interim_side;
    double p_u;
  };
  std::vector<Scenario> scenarios;
  if (cfg.sweeps.contains("fig3") && cfg.sweeps["fig3"].contains("scenarios")) {
    const auto& arr = cfg.sweeps["fig3"]["scenarios"];
    if (!arr.is_array() || arr.empty()) {
      throw config_error("config: sweeps.fig3.scenarios must be a list");
    }
    for (const auto& s : arr) {
      if (!s.is_object() || !s.contains("interim_side") || !s.contains("p_u")) {
        throw config_error(
            "config: each sweeps.fig3.scenarios entry needs interim_side and "
            "p_u");
      }
      scenarios.push_back(
          {io::read_meters(s["interim_side"],
                           "sweeps.fig3.scenarios.interim_side"),
           io::read_power_w(s["p_u"], "sweeps.fig3.scenarios.p_u")});
    }
  } else {
    scenarios = {{20.0, 1e-6}, {100.0, 1e-5}};
  }

  io::Csv csv({"lambda_ap_per_m2", "interim_side_m", "p_u_w",
               "marginal_product", "joint", "gap"},
              digest);
  for (const auto& sc : scenarios) {
    auto sim_cfg = cfg.sim;
    sim_cfg.interim_side = sc.interim_side;
    if (!(sim_cfg.interim_side < sim_cfg.window_side)) {
      throw config_error("config: fig3 scenario probe exceeds the window");
    }
    for (const double lambda : grid) {
      auto params = cfg.params;
      params.lambda_ap = lambda;
      const auto stats =
          sim::independence_stats(sim_cfg, params, cfg.n_dl, sc.p_u);
      csv.row({io::format_double(lambda), io::format_double(sc.interim_side),
               io::format_double(sc.p_u),
               io::format_double(stats.p_first * stats.p_second),
               io::format_double(stats.joint),
               io::format_double(stats.gap())});
    }
  }
  return {"fig3.csv", csv};
}

/// Empirical versus analytic uplink void probability over probe side length.
inline FigureTable make_fig4(const io::Config& cfg, const std::string& digest) {
  std::vector<double> fallback;
  for (int l = 1; l <= 20; ++l) fallback.push_back(static_cast<double>(l));
  const auto grid =
      detail::tagged_list(cfg.sweeps, "fig4", "l_grid", "m", fallback);

  const auto points =
      sim::void_probability(cfg.sim, cfg.params, cfg.n_dl, cfg.p_u, grid);
  io::Csv csv({"l_m", "void_empirical", "void_analytic"}, digest);
  for (const auto& p : points) {
    csv.row({io::format_double(p.l), io::format_double(p.empirical),
             io::format_double(p.analytic)});
  }
  return {"fig4.csv", csv};
}

/// Markov-chain transmission bound against its closed-form envelope over
/// battery capacity.
inline FigureTable make_fig5(const io::Config& cfg, const std::string& digest) {
  std::vector<double> fallback;
  for (int i = 0; i <= 10; ++i) fallback.push_back(0.2 + 0.1 * i);
  const auto grid = detail::tagged_list(cfg.sweeps, "fig5", "capacity_grid",
                                        "watt", fallback);

  const auto dist = energy::make_energy_distribution(cfg.params, cfg.n_dl);
  const double rho_free = energy::rho_free(dist, cfg.p_u);
  io::Csv csv({"capacity_w", "rho_markov", "rho_lower_closed", "rho_upper",
               "rho_free"},
              digest);
  for (const double c : grid) {
    const double markov = battery::rho_lb_markov(
        cfg.params, cfg.n_dl, cfg.p_u, c, cfg.delta0, cfg.theta, cfg.markov);
    const auto bounds =
        battery::rho_bounds_closed(cfg.params, cfg.n_dl, cfg.p_u, c);
    csv.row({io::format_double(c), io::format_double(markov),
             io::format_double(bounds.lower), io::format_double(bounds.upper),
             io::format_double(rho_free)});
  }
  return {"fig5.csv", csv};
}

/// Maximized storage-free throughput over access point density, one curve
/// per node density.
inline FigureTable make_fig6(const io::Config& cfg, const std::string& digest) {
  std::vector<double> ap_fallback;
  for (int i = 1; i <= 20; ++i) ap_fallback.push_back(2.5e-4 * i);
  const auto ap_grid = detail::tagged_list(cfg.sweeps, "fig6",
                                           "lambda_ap_grid", "per_m2",
                                           ap_fallback);
  const auto w_list = detail::tagged_list(cfg.sweeps, "fig6", "lambda_w_list",
                                          "per_m2", {1.2e-3, 2e-3});

  io::Csv csv({"lambda_w_per_m2", "lambda_ap_per_m2", "feasible", "n_star",
               "p_u_star_w", "rho_star", "throughput_bps_hz_m2"},
              digest);
  for (const double lw : w_list) {
    for (const double lap : ap_grid) {
      auto params = cfg.params;
      params.lambda_w = lw;
      params.lambda_ap = lap;
      const auto out = optimize::optimize_free(params);
      csv.row({io::format_double(lw), io::format_double(lap),
               detail::flag(out.feasible),
               out.best ? std::to_string(out.best->n_dl) : "",
               out.best ? io::format_double(out.best->p_u) : "",
               io::format_double(out.rho_at_best),
               io::format_double(out.throughput)});
    }
  }
  return {"fig6.csv", csv};
}

/// Finite-battery throughput bound over the (slot count, power) grid, with
/// the argmax row marked.
inline FigureTable make_fig7(const io::Config& cfg, const std::string& digest) {
  if (cfg.mode.kind != battery::BatteryMode::Kind::finite) {
    throw config_error("config: fig7 requires battery.mode = finite");
  }
  optimize::FiniteScanOptions opts;
  opts.p_floor_override = cfg.p_floor;
  opts.chain = cfg.markov;
  const auto scan =
      optimize::scan_finite(cfg.params, cfg.capacity, cfg.n_power_grid,
                            cfg.delta0, cfg.theta, opts);

  io::Csv csv({"n_dl", "p_u_w", "rho_lb", "throughput_bps_hz_m2",
               "constraint_ok", "is_best"},
              digest);
  for (const auto& cell : scan.cells) {
    const bool best = scan.outcome.best && scan.outcome.best->n_dl == cell.n_dl &&
                      scan.outcome.best->p_u == cell.p_u;
    csv.row({std::to_string(cell.n_dl), io::format_double(cell.p_u),
             io::format_double(cell.rho),
             io::format_double(cell.throughput),
             detail::flag(cell.constraint_ok), detail::flag(best)});
  }
  return {"fig7.csv", csv};
}

inline FigureTable make_figure(const io::Config& cfg, const std::string& id,
                               const std::string& digest) {
  if (id == "fig3") return make_fig3(cfg, digest);
  if (id == "fig4") return make_fig4(cfg, digest);
  if (id == "fig5") return make_fig5(cfg, digest);
  if (id == "fig6") return make_fig6(cfg, digest);
  if (id == "fig7") return make_fig7(cfg, digest);
  throw config_error("figure: unknown id " + id);
}

}  // namespace wpcn::figures
