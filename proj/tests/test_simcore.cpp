#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wpcn/battery.hpp"
#include "wpcn/energy.hpp"
#include "wpcn/params.hpp"
#include "wpcn/rng.hpp"
#include "wpcn/simcore.hpp"
#include "wpcn/uplink.hpp"

using namespace wpcn;

namespace {

NetworkParams short_frame_params() {
  NetworkParams p;
  p.lambda_ap = 5e-4;
  p.lambda_w = 5e-3;
  p.p_d = 10.0;
  p.eta = 0.4;
  p.alpha = 4.0;
  p.sigma2 = 1e-9;
  p.beta = 5.0;
  p.epsilon = 0.05;
  p.t_slots = 3;
  p.p_max = 0.02;
  return p;
}

NetworkParams long_frame_params() {
  NetworkParams p = short_frame_params();
  p.lambda_ap = 8e-4;
  p.lambda_w = 1.2e-3;
  p.t_slots = 100;
  return p;
}

double ks_statistic_vs_uniform(std::vector<double> xs, double side) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = xs[i] / side;
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return d;
}

}  // namespace

TEST_CASE("point process counts and placement", "[simcore]") {
  const double lambda = 8e-4;
  const double side = 1000.0;

  double total = 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  rng::Xoshiro256ss gen(11);
  for (int i = 0; i < 1000; ++i) {
    const auto pts = sim::gen_ppp(gen, lambda, side);
    total += static_cast<double>(pts.size());
    if (i < 40) {
      for (const auto& p : pts) {
        REQUIRE(p.x >= 0.0);
        REQUIRE(p.x <= side);
        REQUIRE(p.y >= 0.0);
        REQUIRE(p.y <= side);
        xs.push_back(p.x);
        ys.push_back(p.y);
      }
    }
  }
  // Mean count within 3 standard errors of lambda * area = 800.
  const double mean = total / 1000.0;
  REQUIRE(std::abs(mean - 800.0) <= 3.0 * std::sqrt(800.0 / 1000.0));

  // Positions uniform per axis (Kolmogorov-Smirnov, 1% critical value).
  const double bar = 1.63 / std::sqrt(static_cast<double>(xs.size()));
  REQUIRE(ks_statistic_vs_uniform(xs, side) <= bar);
  REQUIRE(ks_statistic_vs_uniform(ys, side) <= bar);

  rng::Xoshiro256ss tiny(3);
  REQUIRE(sim::gen_ppp(tiny, lambda, 0.0).empty());
  REQUIRE_THROWS_AS(sim::gen_ppp(tiny, 0.0, side), domain_error);
}

TEST_CASE("sub-square voids match the Poisson law", "[simcore]") {
  const double lambda = 8e-4;
  const double side = 100.0;
  const double l = 20.0;
  const double expected = std::exp(-lambda * l * l);

  rng::Xoshiro256ss gen(29);
  int empty_fresh = 0;
  int empty_moved = 0;
  const int draws = 10000;
  const double lo = 0.5 * (side - l);
  auto has_point = [&](const sim::PointSet& pts) {
    for (const auto& p : pts) {
      if (p.x >= lo && p.x <= lo + l && p.y >= lo && p.y <= lo + l) {
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < draws; ++i) {
    const auto pts = sim::gen_ppp(gen, lambda, side);
    if (!has_point(pts)) ++empty_fresh;
    const auto moved = sim::displace(pts, gen, side);
    REQUIRE(moved.size() == pts.size());
    if (!has_point(moved)) ++empty_moved;
  }
  REQUIRE(std::abs(empty_fresh / double(draws) - expected) <= 0.01);
  REQUIRE(std::abs(empty_moved / double(draws) - expected) <= 0.01);
}

TEST_CASE("relocation decorrelates positions", "[simcore]") {
  const double side = 1.0;
  rng::Xoshiro256ss gen(53);
  sim::PointSet pts;
  for (int i = 0; i < 100000; ++i) {
    pts.push_back({gen.uniform(0.0, side), gen.uniform(0.0, side)});
  }
  const auto once = sim::displace(pts, gen, side);
  const auto twice = sim::displace(once, gen, side);
  double acc = 0.0;
  for (std::size_t i = 0; i < once.size(); ++i) {
    acc += std::hypot(twice[i].x - once[i].x, twice[i].y - once[i].y);
  }
  // Mean distance between two independent uniform points in a unit square.
  const double oracle = 0.5214054331;
  REQUIRE(std::abs(acc / once.size() - oracle) <= 0.003);
}

TEST_CASE("single-frame harvest primitives", "[simcore]") {
  auto p = short_frame_params();
  p.eta = 1.0;
  p.p_d = 1.0;

  rng::Xoshiro256ss gen(71);
  REQUIRE(sim::harvest_frame(gen, {0.0, 0.0}, {}, 1, p) == 0.0);
  REQUIRE_THROWS_AS(sim::harvest_frame(gen, {0.0, 0.0}, {{1.0, 0.0}}, 0, p),
                    domain_error);

  // One access point one meter away with a single downlink slot gives a
  // unit-mean exponential energy.
  const sim::PointSet one = {{1.0, 0.0}};
  double acc = 0.0;
  int tail = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double z = sim::harvest_frame(gen, {0.0, 0.0}, one, 1, p);
    acc += z;
    if (z >= 1.0) ++tail;
  }
  REQUIRE(std::abs(acc / draws - 1.0) <= 0.02);
  REQUIRE(std::abs(tail / double(draws) - std::exp(-1.0)) <= 0.01);

  // Distances below the separation floor behave as if at the floor.
  rng::Xoshiro256ss a(5);
  rng::Xoshiro256ss b(5);
  const double near = sim::harvest_frame(a, {0.0, 0.0}, {{0.01, 0.0}}, 2, p);
  const double floor = sim::harvest_frame(b, {0.0, 0.0}, {{0.1, 0.0}}, 2, p);
  REQUIRE(near == floor);

  // Deterministic given the generator seed.
  rng::Xoshiro256ss c(5);
  REQUIRE(sim::harvest_frame(c, {0.0, 0.0}, {{0.01, 0.0}}, 2, p) == near);
}

TEST_CASE("frame harvest matches the closed tail law", "[simcore]") {
  auto p = long_frame_params();
  const int n_dl = 60;
  const double window = 2000.0;
  const auto dist = energy::make_energy_distribution(p, n_dl);

  const int frames = 1500;
  std::vector<double> zs;
  zs.reserve(frames);
  const sim::Point node = {0.5 * window, 0.5 * window};
  for (int f = 0; f < frames; ++f) {
    rng::Xoshiro256ss gen(rng::derive_seed(404, f, 0, 0));
    const auto aps = sim::gen_ppp(gen, p.lambda_ap, window);
    zs.push_back(sim::harvest_frame(gen, node, aps, n_dl, p));
  }
  std::sort(zs.begin(), zs.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double cdf = 1.0 - energy::ccdf_zf(dist, zs[i]);
    sup = std::max(sup, std::abs((i + 1.0) / frames - cdf));
    sup = std::max(sup, std::abs(cdf - i / double(frames)));
  }
  REQUIRE(sup <= 0.035);
}

TEST_CASE("battery recursion reproduces the analytic odds", "[simcore]") {
  auto p = long_frame_params();
  const int n_dl = 60;
  const double p_u = 0.02;

  sim::SimConfig cfg;
  cfg.frames = 100000;
  cfg.seed = 2024;
  cfg.fast_harvest = true;

  SECTION("storage-free matches the tail probability") {
    const auto dist = energy::make_energy_distribution(p, n_dl);
    const double rho = energy::rho_free(dist, p_u);
    const double hat = sim::run_battery_frames(cfg, p, n_dl, p_u);
    REQUIRE(std::abs(hat - rho) <= 0.01);
  }

  SECTION("unbounded storage transmits almost always") {
    cfg.mode = battery::BatteryMode::make_infinite();
    REQUIRE(sim::run_battery_frames(cfg, p, n_dl, p_u) >= 0.995);
  }

  SECTION("finite storage matches the chain bound") {
    cfg.mode = battery::BatteryMode::make_finite(0.4);
    const double hat = sim::run_battery_frames(cfg, p, n_dl, p_u);
    const double markov = battery::rho_lb_markov(p, n_dl, p_u, 0.4);
    REQUIRE(std::abs(hat - markov) <= 0.02);
  }

  SECTION("input guards") {
    REQUIRE_THROWS_AS(sim::run_battery_frames(cfg, p, 0, p_u), domain_error);
    REQUIRE_THROWS_AS(sim::run_battery_frames(cfg, p, n_dl, 0.0), domain_error);
    cfg.mode = battery::BatteryMode::make_finite(0.01);
    REQUIRE_THROWS_AS(sim::run_battery_frames(cfg, p, n_dl, p_u), domain_error);
    cfg.mode = battery::BatteryMode::make_free();
    cfg.interim_side = 2000.0;
    REQUIRE_THROWS_AS(sim::run_battery_frames(cfg, p, n_dl, p_u), domain_error);
    cfg.interim_side = 100.0;
    cfg.frames = 0;
    REQUIRE_THROWS_AS(sim::run_battery_frames(cfg, p, n_dl, p_u), domain_error);
  }
}

TEST_CASE("mobility types give matching transmission odds", "[simcore]") {
  auto p = long_frame_params();
  const int n_dl = 60;
  const double p_u = 0.02;

  sim::SimConfig cfg;
  cfg.window_side = 2000.0;
  cfg.interim_side = 1000.0;
  cfg.frames = 1500;
  cfg.seed = 7;
  cfg.mobility = sim::Mobility::nodes_move;
  const double rho_nodes = sim::run_battery_frames(cfg, p, n_dl, p_u);

  cfg.seed = 8;
  cfg.mobility = sim::Mobility::aps_move;
  const double rho_aps = sim::run_battery_frames(cfg, p, n_dl, p_u);

  // Two-sample test at the 1% level.
  const double pool = 0.5 * (rho_nodes + rho_aps);
  const double se = std::sqrt(pool * (1.0 - pool) * 2.0 / cfg.frames);
  REQUIRE(std::abs(rho_nodes - rho_aps) <= 2.58 * se);

  // Both near the analytic storage-free value.
  const auto dist = energy::make_energy_distribution(p, n_dl);
  const double rho = energy::rho_free(dist, p_u);
  REQUIRE(std::abs(rho_nodes - rho) <= 0.05);
  REQUIRE(std::abs(rho_aps - rho) <= 0.05);
}

TEST_CASE("tagged-pair energies are nearly independent", "[simcore]") {
  auto p = short_frame_params();
  const int n_dl = 2;
  const double p_u = 1e-5;

  sim::SimConfig cfg;
  cfg.interim_side = 100.0;
  cfg.frames = 4000;
  cfg.seed = 91;
  REQUIRE(sim::independence_gap(cfg, p, n_dl, p_u) <= 0.03);
}

TEST_CASE("a frozen close pair shows the dependence", "[simcore]") {
  auto p = short_frame_params();
  p.lambda_ap = 1e-4;
  const int n_dl = 2;
  const double p_u = 1e-5;

  sim::SimConfig cfg;
  cfg.interim_side = 20.0;
  cfg.frames = 4000;
  cfg.seed = 6;
  cfg.mobility = sim::Mobility::nodes_move;
  const double moving = sim::independence_gap(cfg, p, n_dl, p_u);

  cfg.mobility = sim::Mobility::aps_move;
  const double frozen = sim::independence_gap(cfg, p, n_dl, p_u);
  REQUIRE(frozen > moving);
}

TEST_CASE("uplink voids track the thinned-process law", "[simcore]") {
  const auto p = short_frame_params();
  const int n_dl = 2;
  const double p_u = 1e-5;

  sim::SimConfig cfg;
  cfg.interim_side = 100.0;
  cfg.frames = 4000;
  cfg.seed = 314;

  const std::vector<double> grid = {1.0, 5.0, 10.0, 15.0, 20.0};
  const auto out = sim::void_probability(cfg, p, n_dl, p_u, grid);
  REQUIRE(out.size() == grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    REQUIRE(out[i].l == grid[i]);
    REQUIRE(std::abs(out[i].empirical - out[i].analytic) <= 0.03);
    if (i > 0) {
      REQUIRE(out[i].empirical <= out[i - 1].empirical);
      REQUIRE(out[i].analytic <= out[i - 1].analytic);
    }
  }
  // Small probes are almost always empty.
  REQUIRE(out.front().analytic >= 0.99);
  REQUIRE(out.front().empirical >= 0.98);

  auto bad = cfg;
  bad.mode = battery::BatteryMode::make_finite(0.1);
  REQUIRE_THROWS_AS(sim::void_probability(bad, p, n_dl, p_u, grid),
                    domain_error);
  REQUIRE_THROWS_AS(sim::void_probability(cfg, p, n_dl, p_u, {}),
                    domain_error);
  REQUIRE_THROWS_AS(sim::void_probability(cfg, p, n_dl, p_u, {150.0}),
                    domain_error);
}

TEST_CASE("uplink success odds match the closed form", "[simcore]") {
  const auto p = short_frame_params();
  const int n_dl = 2;

  sim::SimConfig cfg;
  cfg.frames = 4000;
  cfg.seed = 2718;

  SECTION("interference-free limit") {
    auto quiet = p;
    quiet.sigma2 = 1e-7;
    const double p_u = 1e-3;
    const double analytic = uplink::psuc_closed4(quiet, 0.0, n_dl, p_u);
    const double hat = sim::empirical_psuc(cfg, quiet, 0.0, n_dl, p_u);
    REQUIRE(std::abs(hat - analytic) <= 0.02);
  }

  SECTION("interference-limited operating point") {
    const double rho = 0.3;
    const double p_u = 1e-5;
    const double analytic = uplink::psuc_closed4(p, rho, n_dl, p_u);
    const double hat = sim::empirical_psuc(cfg, p, rho, n_dl, p_u);
    REQUIRE(std::abs(hat - analytic) <= 0.03);
  }

  SECTION("overwhelming noise fails every trial") {
    auto noisy = p;
    noisy.sigma2 = 1.0;
    auto fast = cfg;
    fast.frames = 400;
    REQUIRE(sim::empirical_psuc(fast, noisy, 0.3, n_dl, 1e-9) <= 0.01);
  }

  SECTION("input guards") {
    REQUIRE_THROWS_AS(sim::empirical_psuc(cfg, p, 1.5, n_dl, 1e-5),
                      domain_error);
    REQUIRE_THROWS_AS(sim::empirical_psuc(cfg, p, 0.3, 0, 1e-5), domain_error);
  }
}

TEST_CASE("experiments are reproducible by seed", "[simcore]") {
  const auto p = short_frame_params();
  sim::SimConfig cfg;
  cfg.frames = 200;
  cfg.seed = 555;

  const double a = sim::independence_gap(cfg, p, 2, 1e-5);
  const double b = sim::independence_gap(cfg, p, 2, 1e-5);
  REQUIRE(a == b);

  const double pa = sim::empirical_psuc(cfg, p, 0.3, 2, 1e-5);
  const double pb = sim::empirical_psuc(cfg, p, 0.3, 2, 1e-5);
  REQUIRE(pa == pb);

  auto other = cfg;
  other.seed = 556;
  REQUIRE(sim::empirical_psuc(other, p, 0.3, 2, 1e-5) != pa);

  auto spatial = cfg;
  spatial.mobility = sim::Mobility::aps_move;
  const double ra = sim::run_battery_frames(spatial, p, 2, 1e-5);
  const double rb = sim::run_battery_frames(spatial, p, 2, 1e-5);
  REQUIRE(ra == rb);
}
