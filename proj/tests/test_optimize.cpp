#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/optimize.hpp"
#include "wpcn/params.hpp"
#include "wpcn/uplink.hpp"

using namespace wpcn;

namespace {

NetworkParams fig_params() {
  NetworkParams p;
  p.lambda_ap = 8e-4;
  p.lambda_w = 1.2e-3;
  p.p_d = 10.0;
  p.eta = 0.4;
  p.alpha = 4.0;
  p.sigma2 = 1e-9;
  p.beta = 5.0;
  p.epsilon = 0.05;
  p.t_slots = 100;
  p.p_max = 0.02;
  return p;
}

// Medium-regime configuration with a small frame so chain scans stay cheap.
NetworkParams small_frame_params() {
  NetworkParams p = fig_params();
  p.t_slots = 20;
  p.lambda_ap = 8e-3;
  p.sigma2 = 2e-6;
  p.p_max = 0.1;
  return p;
}

double log_uniform(std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(gen));
}

}  // namespace

TEST_CASE("throughput scales with density and transmission odds", "[optimize]") {
  REQUIRE(optimize::spatial_throughput(1.2e-3, 0.0, 5.0) == 0.0);
  REQUIRE(optimize::spatial_throughput(1.2e-3, 1.0, 5.0) ==
          Catch::Approx(0.0012 * std::log2(6.0)).epsilon(1e-12));
  REQUIRE(optimize::spatial_throughput(1.2e-3, 1.0, 5.0) ==
          Catch::Approx(0.003101).margin(2e-6));
  REQUIRE(optimize::spatial_throughput(1.2e-3, 0.5, 5.0) ==
          Catch::Approx(0.5 * optimize::spatial_throughput(1.2e-3, 1.0, 5.0))
              .epsilon(1e-14));
  REQUIRE_THROWS_AS(optimize::spatial_throughput(1.2e-3, 1.5, 5.0), domain_error);
  REQUIRE_THROWS_AS(optimize::spatial_throughput(0.0, 0.5, 5.0), domain_error);
}

TEST_CASE("certain-transmission feasibility gate", "[optimize]") {
  const auto p = fig_params();
  REQUIRE(optimize::feasibility_rho1(p, 60, 1e-30));

  // Same verdict as the battery module's saturation threshold everywhere.
  for (double lambda : {2e-4, 8e-4, 3e-3, 2e-2}) {
    for (double p_u : {1e-6, 1e-4, 1e-2}) {
      for (int n_dl : {2, 40}) {
        auto q = p;
        q.lambda_ap = lambda;
        REQUIRE(optimize::feasibility_rho1(q, n_dl, p_u) ==
                battery::rho_one_threshold(q, n_dl, p_u));
      }
    }
  }

  // Inclusive at the saturation power cap, evaluated just inside the edge.
  const auto cfg = numerics::default_clip_config();
  const auto dist = energy::make_energy_distribution(p, 60);
  const double cap = (dist.c_coeff / cfg.v_e) * (dist.c_coeff / cfg.v_e);
  REQUIRE(optimize::feasibility_rho1(p, 60, cap * (1.0 - 1e-12)));
  REQUIRE_FALSE(optimize::feasibility_rho1(p, 60, cap * (1.0 + 1e-9)));

  auto a3 = p;
  a3.alpha = 3.0;
  REQUIRE_THROWS_AS(optimize::feasibility_rho1(a3, 60, 1e-4), unsupported_alpha);
}

TEST_CASE("high-density design saturates at the witness region", "[optimize]") {
  auto p = fig_params();
  p.lambda_ap = 0.1;
  const auto oe = uplink::outage_equivalence(p);
  REQUIRE(oe.k_epsilon * p.lambda_ap >= p.lambda_w);

  const auto out = optimize::optimize_free(p);
  REQUIRE(out.feasible);
  REQUIRE(out.regime == optimize::Regime::high_density);
  REQUIRE_FALSE(out.witness_region.empty());
  REQUIRE(out.best.has_value());
  REQUIRE(out.best->n_dl == out.witness_region.front().n_dl);
  REQUIRE(out.best->p_u == oe.p_min);
  REQUIRE(out.rho_at_best == 1.0);
  REQUIRE(out.throughput ==
          Catch::Approx(optimize::spatial_throughput(p.lambda_w, 1.0, p.beta))
              .epsilon(1e-14));

  // Power ceilings in the witness rows match the saturation formula.
  const auto cfg = numerics::default_clip_config();
  for (const auto& row : out.witness_region) {
    REQUIRE(row.p_lo == oe.p_min);
    const double gr = std::exp(std::lgamma(row.n_dl + 0.5) - std::lgamma(row.n_dl));
    const double pi3 = numerics::pi * numerics::pi * numerics::pi;
    const double cap =
        pi3 * p.p_d * p.eta *
        std::pow(p.lambda_ap * gr / (2.0 * cfg.v_e), 2.0);
    REQUIRE(row.p_hi == Catch::Approx(std::min(p.p_max, cap)).epsilon(1e-10));
    REQUIRE(row.p_hi >= row.p_lo);
  }
}

TEST_CASE("medium-density slack boundary slot count", "[optimize]") {
  auto p = fig_params();
  const double k_eps = uplink::k_epsilon_of(p.epsilon, p.beta);
  p.lambda_ap = p.lambda_w / (50.5 * k_eps);

  REQUIRE(optimize::density_regime(p, k_eps) == optimize::Regime::medium_density);
  const int n0 = optimize::n_zero(p, k_eps);
  REQUIRE(n0 == 49);

  // Both defining inequalities hold, and the solution is unique.
  int matches = 0;
  for (int n = 1; n <= p.t_slots - 2; ++n) {
    const bool lower = k_eps * p.lambda_ap * (p.t_slots - n - 1) < p.lambda_w;
    const bool upper = p.lambda_w <= k_eps * p.lambda_ap * (p.t_slots - n);
    if (lower && upper) {
      ++matches;
      REQUIRE(n == n0);
    }
  }
  REQUIRE(matches == 1);
}

TEST_CASE("crowded nodes with scarce power make the design infeasible", "[optimize]") {
  auto p = fig_params();
  p.lambda_w = 0.1;
  const auto out = optimize::optimize_free(p);
  REQUIRE(out.regime == optimize::Regime::low_density);
  REQUIRE_FALSE(out.feasible);
  REQUIRE_FALSE(out.best.has_value());
  REQUIRE(out.throughput == 0.0);
}

TEST_CASE("low-density optimum rides the active-density cap", "[optimize]") {
  auto p = fig_params();
  p.lambda_w = 0.01;
  const auto oe = uplink::outage_equivalence(p);
  REQUIRE(optimize::density_regime(p, oe.k_epsilon) == optimize::Regime::low_density);

  const auto out = optimize::optimize_free(p);
  REQUIRE(out.feasible);
  REQUIRE(out.best.has_value());
  REQUIRE(out.best->n_dl == 1);
  REQUIRE(out.rho_at_best < 1.0);

  // The cap is met with equality at the returned design.
  const double cap = oe.k_epsilon * p.lambda_ap * (p.t_slots - out.best->n_dl);
  REQUIRE(p.lambda_w * out.rho_at_best == Catch::Approx(cap).epsilon(1e-9));

  // The returned power is the exact cap-restoring level, above the floor.
  const double cap_rho = cap / p.lambda_w;
  const double pi3 = numerics::pi * numerics::pi * numerics::pi;
  const double p_s =
      pi3 * p.p_d * p.eta *
      std::pow((2.0 * std::tgamma(1.0) / (p.lambda_ap * std::tgamma(1.5))) *
                   numerics::erfinv(cap_rho),
               -2.0);
  REQUIRE(out.best->p_u == Catch::Approx(std::max(p_s, oe.p_min)).epsilon(1e-10));
  REQUIRE(out.best->p_u > oe.p_min);
}

TEST_CASE("scan optimum matches the exhaustive grid reference", "[optimize]") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int feasible_per_regime[3] = {0, 0, 0};

  for (int draw = 0; draw < 24; ++draw) {
    NetworkParams p;
    p.t_slots = 100;
    p.alpha = 4.0;
    p.lambda_w = log_uniform(gen, 3e-4, 1e-2);
    p.epsilon = 0.02 + 0.08 * unit(gen);
    p.beta = 2.0 + 6.0 * unit(gen);
    p.p_d = 2.0 + 18.0 * unit(gen);
    p.eta = 0.25 + 0.65 * unit(gen);
    p.sigma2 = log_uniform(gen, 1e-9, 1e-7);
    p.p_max = 0.01 + 0.07 * unit(gen);
    const double k_eps = uplink::k_epsilon_of(p.epsilon, p.beta);
    const int target = draw % 3;
    const double x = target == 0   ? 0.3 + 0.6 * unit(gen)
                     : target == 1 ? 1.5 + 78.0 * unit(gen)
                                   : 105.0 + 200.0 * unit(gen);
    p.lambda_ap = p.lambda_w / (k_eps * x);

    const auto opt = optimize::optimize_free(p);
    const auto orc =
        optimize::brute_force_oracle(p, battery::BatteryMode::make_free(), 100);
    REQUIRE(opt.feasible == orc.feasible);
    REQUIRE(opt.regime == orc.regime);
    if (!opt.feasible) continue;
    feasible_per_regime[target] += 1;

    REQUIRE(opt.best->n_dl == orc.best->n_dl);
    REQUIRE(orc.throughput <= opt.throughput * (1.0 + 1e-12));
    REQUIRE(orc.throughput >= opt.throughput * 0.99);

    // Power selection: the floor when the cap is slack, the exact
    // cap-restoring level otherwise.
    const auto oe = uplink::outage_equivalence(p);
    const auto dist = energy::make_energy_distribution(p, opt.best->n_dl);
    const double cap_rho = oe.k_epsilon * p.lambda_ap *
                           (p.t_slots - opt.best->n_dl) / p.lambda_w;
    const double rho_floor = energy::rho_free(dist, oe.p_min);
    if (opt.rho_at_best < 1.0) {
      const double expect =
          rho_floor <= cap_rho
              ? oe.p_min
              : std::max(oe.p_min, std::pow(dist.c_coeff / numerics::erfinv(cap_rho), 2.0));
      REQUIRE(opt.best->p_u == Catch::Approx(expect).epsilon(1e-10));
    }
  }
  REQUIRE(feasible_per_regime[0] >= 1);
  REQUIRE(feasible_per_regime[1] >= 1);
  REQUIRE(feasible_per_regime[2] >= 1);
}

TEST_CASE("unbounded storage reduces to a slot-count interval", "[optimize]") {
  auto p = fig_params();
  const double k_eps = uplink::k_epsilon_of(p.epsilon, p.beta);
  p.lambda_ap = p.lambda_w / (40.5 * k_eps);

  const auto out = optimize::feasible_region_infinite(p);
  REQUIRE(out.feasible);
  REQUIRE(out.regime == optimize::Regime::infinite_battery);
  REQUIRE(out.witness_region.size() == 59);
  REQUIRE(out.witness_region.front().n_dl == 1);
  REQUIRE(out.witness_region.back().n_dl == 59);
  const auto oe = uplink::outage_equivalence(p);
  for (const auto& row : out.witness_region) {
    REQUIRE(row.p_lo == oe.p_min);
    REQUIRE(row.p_hi == p.p_max);
    // Direct check of the constraint at certain transmission.
    REQUIRE(p.lambda_w <= k_eps * p.lambda_ap * (p.t_slots - row.n_dl));
  }
  REQUIRE(p.lambda_w > k_eps * p.lambda_ap * (p.t_slots - 60));
  REQUIRE(out.throughput ==
          Catch::Approx(optimize::spatial_throughput(p.lambda_w, 1.0, p.beta))
              .epsilon(1e-14));

  auto dense = fig_params();
  dense.lambda_ap = dense.lambda_w / (0.5 * k_eps);
  const auto full = optimize::feasible_region_infinite(dense);
  REQUIRE(full.witness_region.size() == 99);

  auto sparse = fig_params();
  sparse.lambda_ap = sparse.lambda_w / (120.0 * k_eps);
  const auto none = optimize::feasible_region_infinite(sparse);
  REQUIRE_FALSE(none.feasible);
  REQUIRE_FALSE(none.best.has_value());
  REQUIRE(none.throughput == 0.0);
  REQUIRE_FALSE(none.notes.empty());
}

TEST_CASE("finite certain-transmission region tightens the power cap", "[optimize]") {
  // At the reference densities the saturation ceiling sits below the power
  // floor for every slot count, so the region is empty.
  const auto p = fig_params();
  const auto none = optimize::feasible_region_finite_rho1(p);
  REQUIRE_FALSE(none.feasible);
  REQUIRE(none.witness_region.empty());

  auto dense = fig_params();
  dense.lambda_ap = 5e-3;
  const auto out = optimize::feasible_region_finite_rho1(dense);
  REQUIRE(out.feasible);
  REQUIRE(out.regime == optimize::Regime::finite_battery);
  const auto wide = optimize::feasible_region_infinite(dense);
  REQUIRE(out.witness_region.size() <= wide.witness_region.size());

  const auto cfg = numerics::default_clip_config();
  const auto oe = uplink::outage_equivalence(dense);
  for (std::size_t i = 0; i < out.witness_region.size(); ++i) {
    const auto& row = out.witness_region[i];
    REQUIRE(row.n_dl == wide.witness_region[i].n_dl);
    REQUIRE(row.p_lo == oe.p_min);
    REQUIRE(row.p_hi <= dense.p_max);
    if (i > 0 && out.witness_region[i - 1].p_hi < dense.p_max) {
      REQUIRE(row.p_hi > out.witness_region[i - 1].p_hi);
    }
  }

  // Spot check of the ceiling against its defining constants.
  const auto& row7 = out.witness_region[6];
  REQUIRE(row7.n_dl == 7);
  const double gr = std::exp(std::lgamma(7.5) - std::lgamma(7.0));
  const double pi3 = numerics::pi * numerics::pi * numerics::pi;
  const double cap =
      pi3 * dense.p_d * dense.eta *
      std::pow(dense.lambda_ap * gr / (2.0 * cfg.v_e), 2.0);
  REQUIRE(row7.p_hi == Catch::Approx(std::min(dense.p_max, cap)).epsilon(1e-10));
}

TEST_CASE("storage never hurts the optimized throughput", "[optimize]") {
  const auto p = small_frame_params();
  const double theta = 2e-3;
  const auto free_out = optimize::optimize_free(p);
  REQUIRE(free_out.feasible);
  REQUIRE(free_out.regime == optimize::Regime::medium_density);
  REQUIRE(free_out.notes.find("n0=9") != std::string::npos);

  const double slack =
      p.lambda_w * theta * std::log2(1.0 + p.beta) * optimize::slot_time;
  const double roof = optimize::spatial_throughput(p.lambda_w, 1.0, p.beta);
  double prev = 0.0;
  for (double cap : {0.04, 0.08, 0.15, 0.3}) {
    const auto fin = optimize::optimize_finite(p, cap, 5, 4e-4, theta);
    REQUIRE(fin.feasible);
    REQUIRE(fin.throughput + slack >= free_out.throughput);
    REQUIRE(fin.throughput <= roof * (1.0 + 1e-12));
    REQUIRE(fin.throughput + 2.0 * slack >= prev);
    prev = fin.throughput;
  }
}

TEST_CASE("grid scans agree across entry points", "[optimize]") {
  auto p = small_frame_params();
  p.t_slots = 8;
  const auto direct = optimize::optimize_finite(p, 0.08, 4);
  const auto oracle =
      optimize::brute_force_oracle(p, battery::BatteryMode::make_finite(0.08), 4);
  REQUIRE(direct.feasible == oracle.feasible);
  REQUIRE(direct.best->n_dl == oracle.best->n_dl);
  REQUIRE(direct.best->p_u == oracle.best->p_u);
  REQUIRE(direct.throughput == oracle.throughput);
  REQUIRE(direct.rho_at_best == oracle.rho_at_best);
}

TEST_CASE("infinite-mode reference attains the ceiling on its region", "[optimize]") {
  const auto p = small_frame_params();
  const auto region = optimize::feasible_region_infinite(p);
  const auto orc =
      optimize::brute_force_oracle(p, battery::BatteryMode::make_infinite(), 10);
  REQUIRE(region.feasible);
  REQUIRE(orc.feasible);
  REQUIRE(orc.throughput == Catch::Approx(region.throughput).epsilon(1e-14));
  REQUIRE(orc.best->n_dl == region.best->n_dl);
  REQUIRE(orc.best->p_u == region.best->p_u);

  auto sparse = fig_params();
  sparse.lambda_ap =
      sparse.lambda_w / (120.0 * uplink::k_epsilon_of(sparse.epsilon, sparse.beta));
  const auto none =
      optimize::brute_force_oracle(sparse, battery::BatteryMode::make_infinite(), 10);
  REQUIRE_FALSE(none.feasible);
}

TEST_CASE("feasible slot range grows with transmit power", "[optimize]") {
  const auto p = small_frame_params();
  const double capacity = 0.08;
  const auto scan = optimize::scan_finite(p, capacity, 4, 4e-4, 2e-3);
  REQUIRE_FALSE(scan.cells.empty());

  // Among powers the battery can hold, a higher level drains the chain
  // harder, lowering rho and widening the slot counts that satisfy the
  // active-density cap.
  std::vector<double> grid;
  for (const auto& cell : scan.cells) {
    if (grid.empty() || grid.back() != cell.p_u) {
      if (std::find(grid.begin(), grid.end(), cell.p_u) == grid.end()) {
        grid.push_back(cell.p_u);
      }
    }
  }
  std::sort(grid.begin(), grid.end());
  int prev_count = 0;
  bool first = true;
  for (const double pw : grid) {
    if (pw > capacity) continue;
    int count = 0;
    for (const auto& cell : scan.cells) {
      if (cell.p_u == pw && cell.constraint_ok) ++count;
    }
    if (!first) REQUIRE(count >= prev_count);
    prev_count = count;
    first = false;
  }
}
