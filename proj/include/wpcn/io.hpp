#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wpcn/battery.hpp"
#include "wpcn/errors.hpp"
#include "wpcn/params.hpp"
#include "wpcn/simcore.hpp"

// Configuration loading, manifests, and machine-readable emission. All
// physical quantities in config files carry explicit unit tags; all emitted
// numbers use shortest round-trip formatting so reruns are byte-identical.
namespace wpcn::io {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* artifact_version = "wpcn 1.0.0";

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) {
    std::ostringstream fallback;
    fallback.precision(17);
    fallback << v;
    return fallback.str();
  }
  return std::string(buf, res.ptr);
}

namespace detail {

inline const ordered_json& require_member(const ordered_json& node,
                                          const std::string& key,
                                          const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end()) {
    throw config_error("config: missing \"" + key + "\" in " + where);
  }
  return *it;
}

inline double require_number(const ordered_json& node,
                             const std::string& where) {
  if (!node.is_number()) {
    throw config_error("config: " + where + " must be a number");
  }
  return node.get<double>();
}

inline long long require_integer(const ordered_json& node,
                                 const std::string& where) {
  if (!node.is_number_integer()) {
    throw config_error("config: " + where + " must be an integer");
  }
  return node.get<long long>();
}

}  // namespace detail

/// Power (or slot-normalized energy) value: {"watt": x} or {"dbm": y}.
inline double read_power_w(const ordered_json& node,
                           const std::string& where) {
  if (!node.is_object() || node.size() != 1) {
    throw config_error("config: " + where +
                       " must be a single-key object {\"watt\": x} or "
                       "{\"dbm\": y}");
  }
  if (node.contains("watt")) {
    const double w = detail::require_number(node["watt"], where + ".watt");
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw config_error("config: " + where + ".watt must be nonnegative");
    }
    return w;
  }
  if (node.contains("dbm")) {
    const double dbm = detail::require_number(node["dbm"], where + ".dbm");
    if (!std::isfinite(dbm)) {
      throw config_error("config: " + where + ".dbm must be finite");
    }
    return std::pow(10.0, (dbm - 30.0) / 10.0);
  }
  throw config_error("config: " + where + " needs a \"watt\" or \"dbm\" key");
}

/// Planar density value: {"per_m2": x}.
inline double read_density(const ordered_json& node, const std::string& where) {
  if (!node.is_object() || !node.contains("per_m2")) {
    throw config_error("config: " + where + " must be {\"per_m2\": x}");
  }
  const double d = detail::require_number(node["per_m2"], where + ".per_m2");
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw config_error("config: " + where + ".per_m2 must be positive");
  }
  return d;
}

/// Length value: {"m": x}.
inline double read_meters(const ordered_json& node, const std::string& where) {
  if (!node.is_object() || !node.contains("m")) {
    throw config_error("config: " + where + " must be {\"m\": x}");
  }
  const double m = detail::require_number(node["m"], where + ".m");
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw config_error("config: " + where + ".m must be positive");
  }
  return m;
}

struct Config {
  NetworkParams params;
  int n_dl = 60;
  double p_u = 0.02;
  battery::BatteryMode mode = battery::BatteryMode::make_free();
  double capacity = 0.0;  // set when a finite mode is configured
  double delta0 = 1e-4;
  double theta = 1e-3;
  battery::MarkovOptions markov;
  sim::SimConfig sim;
  std::string experiment = "rho";
  int n_power_grid = 200;
  std::optional<double> p_floor;  // overrides the scan's power floor
  ordered_json sweeps = ordered_json::object();
};

inline ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw config_error(std::string("config: parse failure: ") + e.what());
  }
}

inline Config parse_config(const ordered_json& root) {
  if (!root.is_object()) throw config_error("config: root must be an object");
  Config cfg;

  const auto& network = detail::require_member(root, "network", "root");
  cfg.params.lambda_ap = read_density(
      detail::require_member(network, "lambda_ap", "network"),
      "network.lambda_ap");
  cfg.params.lambda_w =
      read_density(detail::require_member(network, "lambda_w", "network"),
                   "network.lambda_w");
  cfg.params.p_d = read_power_w(
      detail::require_member(network, "p_d", "network"), "network.p_d");
  if (!(cfg.params.p_d > 0.0)) {
    throw config_error("config: network.p_d must be positive");
  }
  cfg.params.eta = detail::require_number(
      detail::require_member(network, "eta", "network"), "network.eta");
  if (!(cfg.params.eta > 0.0 && cfg.params.eta <= 1.0)) {
    throw config_error("config: network.eta must lie in (0, 1]");
  }
  cfg.params.alpha = detail::require_number(
      detail::require_member(network, "alpha", "network"), "network.alpha");
  if (!(cfg.params.alpha > 2.0)) {
    throw config_error("config: network.alpha must exceed 2");
  }
  cfg.params.sigma2 = read_power_w(
      detail::require_member(network, "sigma2", "network"), "network.sigma2");
  if (!(cfg.params.sigma2 > 0.0)) {
    throw config_error("config: network.sigma2 must be positive");
  }
  cfg.params.beta = detail::require_number(
      detail::require_member(network, "beta", "network"), "network.beta");
  if (!(cfg.params.beta > 0.0)) {
    throw config_error("config: network.beta must be positive");
  }
  cfg.params.epsilon = detail::require_number(
      detail::require_member(network, "epsilon", "network"),
      "network.epsilon");
  if (!(cfg.params.epsilon > 0.0 && cfg.params.epsilon < 1.0)) {
    throw config_error("config: network.epsilon must lie in (0, 1)");
  }

  const auto& protocol = detail::require_member(root, "protocol", "root");
  cfg.params.t_slots = static_cast<int>(detail::require_integer(
      detail::require_member(protocol, "t_slots", "protocol"),
      "protocol.t_slots"));
  if (cfg.params.t_slots < 3) {
    throw config_error("config: protocol.t_slots must be at least 3");
  }
  cfg.n_dl = static_cast<int>(detail::require_integer(
      detail::require_member(protocol, "n_dl", "protocol"), "protocol.n_dl"));
  if (cfg.n_dl < 1 || cfg.n_dl > cfg.params.t_slots - 1) {
    throw config_error("config: protocol.n_dl must lie in [1, t_slots - 1]");
  }
  cfg.p_u = read_power_w(detail::require_member(protocol, "p_u", "protocol"),
                         "protocol.p_u");
  if (!(cfg.p_u > 0.0)) {
    throw config_error("config: protocol.p_u must be positive");
  }
  cfg.params.p_max = read_power_w(
      detail::require_member(protocol, "p_max", "protocol"), "protocol.p_max");
  if (!(cfg.params.p_max > 0.0)) {
    throw config_error("config: protocol.p_max must be positive");
  }

  if (root.contains("battery")) {
    const auto& bat = root["battery"];
    const std::string kind =
        bat.contains("mode") ? bat["mode"].get<std::string>() : "free";
    if (kind == "free") {
      cfg.mode = battery::BatteryMode::make_free();
    } else if (kind == "infinite") {
      cfg.mode = battery::BatteryMode::make_infinite();
    } else if (kind == "finite") {
      cfg.capacity = read_power_w(
          detail::require_member(bat, "capacity", "battery"),
          "battery.capacity");
      if (!(cfg.capacity > 0.0)) {
        throw config_error("config: battery.capacity must be positive");
      }
      cfg.mode = battery::BatteryMode::make_finite(cfg.capacity);
    } else {
      throw config_error(
          "config: battery.mode must be free, finite, or infinite");
    }
    if (bat.contains("capacity") && kind != "finite") {
      cfg.capacity = read_power_w(bat["capacity"], "battery.capacity");
    }
    if (bat.contains("state_cap")) {
      const auto cap =
          detail::require_integer(bat["state_cap"], "battery.state_cap");
      if (cap < 3) throw config_error("config: battery.state_cap too small");
      cfg.markov.state_cap = static_cast<std::size_t>(cap);
    }
    if (bat.contains("delta0")) {
      cfg.delta0 = detail::require_number(bat["delta0"], "battery.delta0");
      if (!(cfg.delta0 > 0.0)) {
        throw config_error("config: battery.delta0 must be positive");
      }
    }
    if (bat.contains("theta")) {
      cfg.theta = detail::require_number(bat["theta"], "battery.theta");
      if (!(cfg.theta > 0.0)) {
        throw config_error("config: battery.theta must be positive");
      }
    }
  }

  if (root.contains("simulation")) {
    const auto& s = root["simulation"];
    if (s.contains("window_side")) {
      cfg.sim.window_side = read_meters(s["window_side"],
                                        "simulation.window_side");
    }
    if (s.contains("interim_side")) {
      cfg.sim.interim_side = read_meters(s["interim_side"],
                                         "simulation.interim_side");
    }
    if (!(cfg.sim.interim_side < cfg.sim.window_side)) {
      throw config_error(
          "config: simulation.interim_side must be below window_side");
    }
    if (s.contains("frames")) {
      const auto frames =
          detail::require_integer(s["frames"], "simulation.frames");
      if (frames < 1) {
        throw config_error("config: simulation.frames must be at least 1");
      }
      cfg.sim.frames = static_cast<int>(frames);
    }
    if (s.contains("seed")) {
      const auto& seed = s["seed"];
      if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw config_error("config: simulation.seed must be an integer");
      }
      cfg.sim.seed = seed.get<std::uint64_t>();
    }
    if (s.contains("mobility")) {
      const std::string m = s["mobility"].get<std::string>();
      if (m == "nodes_move") {
        cfg.sim.mobility = sim::Mobility::nodes_move;
      } else if (m == "aps_move") {
        cfg.sim.mobility = sim::Mobility::aps_move;
      } else {
        throw config_error(
            "config: simulation.mobility must be nodes_move or aps_move");
      }
    }
    if (s.contains("fast_harvest")) {
      if (!s["fast_harvest"].is_boolean()) {
        throw config_error("config: simulation.fast_harvest must be boolean");
      }
      cfg.sim.fast_harvest = s["fast_harvest"].get<bool>();
    }
    if (s.contains("experiment")) {
      cfg.experiment = s["experiment"].get<std::string>();
      if (cfg.experiment != "rho" && cfg.experiment != "void" &&
          cfg.experiment != "psuc" && cfg.experiment != "gap") {
        throw config_error(
            "config: simulation.experiment must be rho, void, psuc, or gap");
      }
    }
  }
  cfg.sim.mode = cfg.mode;

  if (root.contains("optimize")) {
    const auto& opt = root["optimize"];
    if (opt.contains("n_power_grid")) {
      const auto g =
          detail::require_integer(opt["n_power_grid"], "optimize.n_power_grid");
      if (g < 1) {
        throw config_error("config: optimize.n_power_grid must be positive");
      }
      cfg.n_power_grid = static_cast<int>(g);
    }
    if (opt.contains("p_floor")) {
      cfg.p_floor = read_power_w(opt["p_floor"], "optimize.p_floor");
      if (!(*cfg.p_floor > 0.0)) {
        throw config_error("config: optimize.p_floor must be positive");
      }
    }
  }

  if (root.contains("sweeps")) {
    if (!root["sweeps"].is_object()) {
      throw config_error("config: sweeps must be an object");
    }
    cfg.sweeps = root["sweeps"];
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  return parse_config(load_json_file(path));
}

/// Canonical serialization of every effective setting; the manifest digest
/// hashes this, so overrides given on the command line change the digest.
inline ordered_json resolved_json(const Config& cfg) {
  ordered_json j;
  j["network"] = {{"lambda_ap", {{"per_m2", cfg.params.lambda_ap}}},
                  {"lambda_w", {{"per_m2", cfg.params.lambda_w}}},
                  {"p_d", {{"watt", cfg.params.p_d}}},
                  {"eta", cfg.params.eta},
                  {"alpha", cfg.params.alpha},
                  {"sigma2", {{"watt", cfg.params.sigma2}}},
                  {"beta", cfg.params.beta},
                  {"epsilon", cfg.params.epsilon}};
  j["protocol"] = {{"t_slots", cfg.params.t_slots},
                   {"n_dl", cfg.n_dl},
                   {"p_u", {{"watt", cfg.p_u}}},
                   {"p_max", {{"watt", cfg.params.p_max}}}};
  const char* kind = cfg.mode.kind == battery::BatteryMode::Kind::free
                         ? "free"
                         : cfg.mode.kind == battery::BatteryMode::Kind::finite
                               ? "finite"
                               : "infinite";
  j["battery"] = {{"mode", kind},
                  {"capacity", {{"watt", cfg.capacity}}},
                  {"state_cap", cfg.markov.state_cap},
                  {"delta0", cfg.delta0},
                  {"theta", cfg.theta}};
  j["simulation"] = {
      {"window_side", {{"m", cfg.sim.window_side}}},
      {"interim_side", {{"m", cfg.sim.interim_side}}},
      {"frames", cfg.sim.frames},
      {"seed", cfg.sim.seed},
      {"mobility", cfg.sim.mobility == sim::Mobility::nodes_move
                       ? "nodes_move"
                       : "aps_move"},
      {"fast_harvest", cfg.sim.fast_harvest},
      {"experiment", cfg.experiment}};
  ordered_json optimize = {{"n_power_grid", cfg.n_power_grid}};
  if (cfg.p_floor) optimize["p_floor"] = {{"watt", *cfg.p_floor}};
  j["optimize"] = optimize;
  j["sweeps"] = cfg.sweeps;
  return j;
}

inline std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

inline std::string config_digest(const Config& cfg) {
  return hex64(fnv1a64(dump_json(resolved_json(cfg))));
}

struct RunManifest {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string versions = artifact_version;
  std::vector<std::string> outputs;
};

inline ordered_json manifest_json(const RunManifest& m) {
  return ordered_json{{"config_digest", m.config_digest},
                      {"seed", m.seed},
                      {"versions", m.versions},
                      {"outputs", m.outputs}};
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw config_error("io: cannot open " + path.string() + " for writing");
  }
  out << content;
  if (!out) throw config_error("io: short write to " + path.string());
}

/// RFC-4180 table builder. Every row carries the manifest digest in its
/// last column so a data file can be traced back to its exact run.
class Csv {
 public:
  Csv(std::vector<std::string> header, std::string digest)
      : digest_(std::move(digest)), columns_(header.size() + 1) {
    header.push_back("manifest_digest");
    append_row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() + 1 != columns_) {
      throw config_error("io: csv row width mismatch");
    }
    auto full = cells;
    full.push_back(digest_);
    append_row(full);
    ++rows_;
  }

  const std::string& str() const { return body_; }
  std::size_t rows() const { return rows_; }

  static std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
      if (c == '"') out += "\"\"";
      else out += c;
    }
    out += "\"";
    return out;
  }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) body_ += ",";
      body_ += quote(cells[i]);
    }
    body_ += "\r\n";
  }

  std::string digest_;
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string body_;
};

}  // namespace wpcn::io
