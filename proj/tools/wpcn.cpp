#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/figures.hpp"
#include "wpcn/io.hpp"
#include "wpcn/optimize.hpp"
#include "wpcn/simcore.hpp"
#include "wpcn/uplink.hpp"

namespace {

namespace fs = std::filesystem;
using wpcn::io::ordered_json;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string mode;
  std::string figure;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool with_mode) {
  sub->add_option("--config", opts.config_path, "configuration file (JSON)")
      ->required();
  sub->add_option("--seed", opts.seed, "override the configured seed");
  sub->add_option("--out", opts.out_dir, "directory for emitted files");
  if (with_mode) {
    sub->add_option("--mode", opts.mode, "battery mode override")
        ->check(CLI::IsMember({"free", "finite", "infinite"}));
  }
}

wpcn::io::Config load_effective(const CommonOpts& opts) {
  auto cfg = wpcn::io::load_config(opts.config_path);
  if (opts.seed) cfg.sim.seed = *opts.seed;
  if (!opts.mode.empty()) {
    if (opts.mode == "free") {
      cfg.mode = wpcn::battery::BatteryMode::make_free();
    } else if (opts.mode == "infinite") {
      cfg.mode = wpcn::battery::BatteryMode::make_infinite();
    } else {
      if (!(cfg.capacity > 0.0)) {
        throw wpcn::config_error(
            "config: finite mode requires battery.capacity");
      }
      cfg.mode = wpcn::battery::BatteryMode::make_finite(cfg.capacity);
    }
    cfg.sim.mode = cfg.mode;
  }
  return cfg;
}

const char* mode_name(const wpcn::battery::BatteryMode& mode) {
  using Kind = wpcn::battery::BatteryMode::Kind;
  switch (mode.kind) {
    case Kind::free: return "free";
    case Kind::finite: return "finite";
    case Kind::infinite: return "infinite";
  }
  return "free";
}

///// Emit a command's result: always to stdout; also to files when an output
/// directory was requested.
void emit(const wpcn::io::Config& cfg, const CommonOpts& opts,
          const std::string& json_name, ordered_json result) {
  wpcn::io::RunManifest manifest;
  manifest.config_digest = wpcn::io::config_digest(cfg);
  manifest.seed = cfg.sim.seed;
  if (!opts.out_dir.empty()) manifest.outputs.push_back(json_name);
  result["manifest"] = wpcn::io::manifest_json(manifest);
  const std::string text = wpcn::io::dump_json(result);
  std::cout << text;
  if (!opts.out_dir.empty()) {
    const fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    wpcn::io::write_text(dir / json_name, text);
    wpcn::io::write_text(dir / "manifest.json",
                         wpcn::io::dump_json(wpcn::io::manifest_json(manifest)));
  }
}

int run_params(const CommonOpts& opts) {
  const auto cfg = load_effective(opts);
  const auto& p = cfg.params;
  const auto oe = wpcn::uplink::outage_equivalence(p);
  const auto clip = wpcn::numerics::default_clip_config();
  const auto regime = wpcn::optimize::density_regime(p, oe.k_epsilon);

  ordered_json j;
  j["k_epsilon"] = oe.k_epsilon;
  j["g0"] = oe.g0;
  j["v_e"] = clip.v_e;
  j["kappa"] = wpcn::uplink::kappa(p.beta, p.alpha);
  j["p_min_w"] = oe.p_min;
  j["p_max_w"] = p.p_max;
  j["lambda_ap_boundary_high_per_m2"] = p.lambda_w / oe.k_epsilon;
  j["lambda_ap_boundary_low_per_m2"] =
      p.lambda_w / (oe.k_epsilon * (p.t_slots - 1));
  j["regime"] = wpcn::optimize::regime_name(regime);
  emit(cfg, opts, "params.json", std::move(j));
  return 0;
}

int run_rho(const CommonOpts& opts) {
  const auto cfg = load_effective(opts);
  using Kind = wpcn::battery::BatteryMode::Kind;
  double rho = 0.0;
  switch (cfg.mode.kind) {
    case Kind::free: {
      const auto dist =
          wpcn::energy::make_energy_distribution(cfg.params, cfg.n_dl);
      rho = wpcn::energy::rho_free(dist, cfg.p_u);
      break;
    }
    case Kind::finite:
      rho = wpcn::battery::rho_lb_markov(cfg.params, cfg.n_dl, cfg.p_u,
                                         cfg.mode.capacity, cfg.delta0,
                                         cfg.theta, cfg.markov);
      break;
    case Kind::infinite:
      rho = wpcn::battery::rho_infinite();
      break;
  }

  ordered_json j;
  j["mode"] = mode_name(cfg.mode);
  j["n_dl"] = cfg.n_dl;
  j["p_u_w"] = cfg.p_u;
  if (cfg.mode.kind == Kind::finite) j["capacity_w"] = cfg.mode.capacity;
  j["rho"] = rho;
  emit(cfg, opts, "rho.json", std::move(j));
  return 0;
}

ordered_json outcome_json(const wpcn::optimize::OptimizationOutcome& out) {
  ordered_json j;
  j["feasible"] = out.feasible;
  j["regime"] = wpcn::optimize::regime_name(out.regime);
  if (out.best) {
    j["best"] = ordered_json{{"n_dl", out.best->n_dl},
                             {"p_u_w", out.best->p_u}};
  } else {
    j["best"] = nullptr;
  }
  j["throughput_bps_hz_m2"] = out.throughput;
  j["rho_at_best"] = out.rho_at_best;
  ordered_json region = ordered_json::array();
  for (const auto& row : out.witness_region) {
    region.push_back(ordered_json{{"n_dl", row.n_dl},
                                  {"p_lo_w", row.p_lo},
                                  {"p_hi_w", row.p_hi}});
  }
  j["witness_region"] = region;
  j["notes"] = out.notes;
  return j;
}

int run_optimize(const CommonOpts& opts) {
  const auto cfg = load_effective(opts);
  using Kind = wpcn::battery::BatteryMode::Kind;
  wpcn::optimize::OptimizationOutcome out;
  switch (cfg.mode.kind) {
    case Kind::free:
      out = wpcn::optimize::optimize_free(cfg.params);
      break;
    case Kind::finite: {
      wpcn::optimize::FiniteScanOptions scan_opts;
      scan_opts.p_floor_override = cfg.p_floor;
      scan_opts.chain = cfg.markov;
      out = wpcn::optimize::optimize_finite(cfg.params, cfg.mode.capacity,
                                            cfg.n_power_grid, cfg.delta0,
                                            cfg.theta, scan_opts);
      break;
    }
    case Kind::infinite:
      out = wpcn::optimize::feasible_region_infinite(cfg.params);
      break;
  }

  ordered_json j = outcome_json(out);
  j["mode"] = mode_name(cfg.mode);
  emit(cfg, opts, "optimize.json", std::move(j));
  return out.feasible ? 0 : 3;
}

int run_figure(const CommonOpts& opts) {
  const auto cfg = load_effective(opts);
  const std::string digest = wpcn::io::config_digest(cfg);
  const auto table = wpcn::figures::make_figure(cfg, opts.figure, digest);

  const fs::path dir(opts.out_dir.empty() ? "." : opts.out_dir);
  fs::create_directories(dir);
  wpcn::io::write_text(dir / table.name, table.csv.str());

  wpcn::io::RunManifest manifest;
  manifest.config_digest = digest;
  manifest.seed = cfg.sim.seed;
  manifest.outputs.push_back(table.name);
  wpcn::io::write_text(dir / "manifest.json",
                       wpcn::io::dump_json(wpcn::io::manifest_json(manifest)));

  ordered_json j;
  j["figure"] = opts.figure;
  j["rows"] = table.csv.rows();
  j["outputs"] = manifest.outputs;
  j["manifest"] = wpcn::io::manifest_json(manifest);
  std::cout << wpcn::io::dump_json(j);
  return 0;
}

int run_simulate(const CommonOpts& opts) {
  const auto cfg = load_effective(opts);
  using Kind = wpcn::battery::BatteryMode::Kind;

  ordered_json j;
  j["experiment"] = cfg.experiment;
  j["mode"] = mode_name(cfg.mode);
  j["n_dl"] = cfg.n_dl;
  j["p_u_w"] = cfg.p_u;
  j["frames"] = cfg.sim.frames;

  if (cfg.experiment == "rho") {
    j["rho_empirical"] =
        wpcn::sim::run_battery_frames(cfg.sim, cfg.params, cfg.n_dl, cfg.p_u);
  } else if (cfg.experiment == "gap") {
    const auto stats =
        wpcn::sim::independence_stats(cfg.sim, cfg.params, cfg.n_dl, cfg.p_u);
    j["marginal_product"] = stats.p_first * stats.p_second;
    j["joint"] = stats.joint;
    j["gap"] = stats.gap();
  } else if (cfg.experiment == "void") {
    std::vector<double> grid;
    for (int l = 1; l <= 20; ++l) grid.push_back(static_cast<double>(l));
    const auto points = wpcn::sim::void_probability(cfg.sim, cfg.params,
                                                    cfg.n_dl, cfg.p_u, grid);
    ordered_json rows = ordered_json::array();
    for (const auto& p : points) {
      rows.push_back(ordered_json{{"l_m", p.l},
                                  {"void_empirical", p.empirical},
                                  {"void_analytic", p.analytic}});
    }
    j["void"] = rows;
  } else {
    double rho = 1.0;
    if (cfg.mode.kind == Kind::free) {
      const auto dist =
          wpcn::energy::make_energy_distribution(cfg.params, cfg.n_dl);
      rho = wpcn::energy::rho_free(dist, cfg.p_u);
    } else if (cfg.mode.kind == Kind::finite) {
      rho = wpcn::battery::rho_lb_markov(cfg.params, cfg.n_dl, cfg.p_u,
                                         cfg.mode.capacity, cfg.delta0,
                                         cfg.theta, cfg.markov);
    }
    j["rho"] = rho;
    j["psuc_empirical"] =
        wpcn::sim::empirical_psuc(cfg.sim, cfg.params, rho, cfg.n_dl, cfg.p_u);
    j["psuc_analytic"] =
        wpcn::uplink::psuc_closed4(cfg.params, rho, cfg.n_dl, cfg.p_u);
  }
  emit(cfg, opts, "simulate.json", std::move(j));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wireless powered network analysis and simulation"};
  app.require_subcommand(1);

  CommonOpts params_opts;
  auto* sub_params =
      app.add_subcommand("params", "derived protocol constants");
  add_common(sub_params, params_opts, false);

  CommonOpts rho_opts;
  auto* sub_rho =
      app.add_subcommand("rho", "transmission probability for one design");
  add_common(sub_rho, rho_opts, true);

  CommonOpts opt_opts;
  auto* sub_optimize =
      app.add_subcommand("optimize", "throughput-optimal design search");
  add_common(sub_optimize, opt_opts, true);

  CommonOpts fig_opts;
  auto* sub_figure = app.add_subcommand("figure", "emit a data series CSV");
  add_common(sub_figure, fig_opts, false);
  sub_figure->add_option("--figure", fig_opts.figure, "data series id")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6", "fig7"}));

  CommonOpts sim_opts;
  auto* sub_simulate =
      app.add_subcommand("simulate", "run the configured experiment");
  add_common(sub_simulate, sim_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sub_params->parsed()) return run_params(params_opts);
    if (sub_rho->parsed()) return run_rho(rho_opts);
    if (sub_optimize->parsed()) return run_optimize(opt_opts);
    if (sub_figure->parsed()) return run_figure(fig_opts);
    if (sub_simulate->parsed()) return run_simulate(sim_opts);
    return 2;
  } catch (const wpcn::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const wpcn::unsupported_alpha& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const wpcn::infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const wpcn::quantization_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const wpcn::resource_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const wpcn::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
}
