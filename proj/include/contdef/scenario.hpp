#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/format.hpp"
#include "contdef/formation.hpp"
#include "contdef/guidance.hpp"
#include "contdef/netsim.hpp"
#include "contdef/safety.hpp"
#include "contdef/vehicle.hpp"

namespace contdef {

enum class PlanVariant { ContractSquare, SquareVmax };

struct PlanConfig {
  PlanVariant variant = PlanVariant::ContractSquare;
  double segment_duration_s = 3.75;
  bool contraction_auto = true;   // contract to the certified floor
  double contraction = 0.0;       // used when not auto
  double square_edge_m = 1.0;
  double v_max_mps = 0.5;         // SquareVmax only
  bool intermediate_waypoint = false;
};

struct DisturbanceConfig {
  double wind_speed_mps = 0.0;
  double wind_heading_deg = 0.0;
  double wind_accel_gain_per_s = 0.4;
  double noise_std_mps2 = 0.0;
};

struct SimConfig {
  double dt_s = 0.0025;
  std::uint64_t master_seed = 1;
  double warmup_exclude_s = 1.0;
  double certify_rate_hz = 100.0;
  double stall_threshold_s = 0.3;
  int stall_agent = 0;  // 0 disables the injected controller stall
  double stall_start_s = 0.0;
  double stall_duration_s = 0.0;
  double altitude_m = 1.5;  // virtual, reporting only
};

/// Everything one experiment needs, loadable from a sectioned key = value
/// file whose keys carry explicit units.
struct Scenario {
  FormationSpec spec;
  PlanConfig plan;
  FollowerMode mode = FollowerMode::GlobalReference;
  LinkModel link;
  DisturbanceConfig disturbance;
  ControllerGains gains;
  SimConfig sim;
  std::string output_directory = "out";
  std::vector<std::string> warnings;  // from spec validation
};

namespace detail {

struct RawEntry {
  std::string value;
  int line = 0;
};
using RawSection = std::map<std::string, RawEntry>;
using RawFile = std::map<std::string, RawSection>;

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline RawFile tokenize_scenario(const std::string& text) {
  static const std::array<const char*, 8> known_sections{
      "formation", "plan", "followers", "link", "disturbance", "gains", "sim", "output"};
  RawFile file;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("line " + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      bool ok = false;
      for (const char* s : known_sections) ok = ok || section == s;
      if (!ok) {
        throw ParseError("line " + std::to_string(lineno) + ": unknown section [" +
                         section + "]");
      }
      file[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": key outside any section");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": empty key or value");
    }
    if (file[section].count(key)) {
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    file[section][key] = {value, lineno};
  }
  return file;
}

class SectionReader {
 public:
  SectionReader(RawFile& file, const std::string& name) : name_(name) {
    auto it = file.find(name);
    if (it != file.end()) section_ = &it->second;
  }

  bool has(const std::string& key) const { return section_ && section_->count(key); }

  std::string take_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    std::string v = (*section_)[key].value;
    section_->erase(key);
    return v;
  }

  double take_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return parse_double(key, take_string(key, ""));
  }

  long take_long(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    double d = take_double(key, 0.0);
    long l = std::lround(d);
    if (std::abs(d - static_cast<double>(l)) > 1e-12) {
      throw ParseError(where(key) + "expected an integer");
    }
    return l;
  }

  bool take_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    std::string v = take_string(key, "");
    if (v == "on" || v == "true") return true;
    if (v == "off" || v == "false") return false;
    throw ParseError(where(key) + "expected on/off");
  }

  std::vector<double> take_doubles(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    std::istringstream in(take_string(key, ""));
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    return out;
  }

  std::vector<int> take_ints(const std::string& key) {
    std::vector<int> out;
    for (double d : take_doubles(key)) {
      int i = static_cast<int>(std::lround(d));
      if (std::abs(d - i) > 1e-12) throw ParseError(where(key) + "expected integers");
      out.push_back(i);
    }
    return out;
  }

  /// Keys of this section still unconsumed, for unknown-key rejection.
  std::vector<std::string> leftovers() const {
    std::vector<std::string> keys;
    if (section_)
      for (const auto& [k, v] : *section_) keys.push_back(name_ + "." + k);
    return keys;
  }

  /// Keys matching a prefix (e.g. weights_), in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> keys;
    if (section_)
      for (const auto& [k, v] : *section_)
        if (k.rfind(prefix, 0) == 0) keys.push_back(k);
    return keys;
  }

 private:
  double parse_double(const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      double d = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      if (!std::isfinite(d)) throw std::invalid_argument(text);
      return d;
    } catch (const std::exception&) {
      throw ParseError(where(key) + "cannot parse number from '" + text + "'");
    }
  }

  std::string where(const std::string& key) const {
    return "[" + name_ + "] " + key + ": ";
  }

  RawSection* section_ = nullptr;
  std::string name_;
};

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  auto raw = detail::tokenize_scenario(text);
  Scenario sc;

  detail::SectionReader formation(raw, "formation");
  sc.spec.epsilon_m = formation.take_double("epsilon_m", 0.28);
  sc.spec.delta_m = formation.take_double("delta_m", 0.40);
  sc.spec.leaders = formation.take_ints("leaders");
  if (sc.spec.leaders.empty()) sc.spec.leaders = {1, 2, 3};
  sc.spec.followers = formation.take_ints("followers");
  if (sc.spec.followers.empty()) sc.spec.followers = {4, 5};
  if (sc.spec.leaders.size() != 3) {
    throw ParseError("[formation] leaders: exactly 3 leader ids required");
  }

  double edge = formation.take_double("leader_triangle_edge_m", 0.0);
  for (const auto& key : formation.keys_with_prefix("position_")) {
    std::string tail = key.substr(std::string("position_").size());
    if (tail.size() < 3 || tail.substr(tail.size() - 2) != "_m") {
      throw ParseError("[formation] " + key + ": position keys end in _m");
    }
    int id = 0;
    try {
      id = std::stoi(tail.substr(0, tail.size() - 2));
    } catch (const std::exception&) {
      throw ParseError("[formation] " + key + ": cannot parse agent id");
    }
    auto xy = formation.take_doubles(key);
    if (xy.size() != 2) throw ParseError("[formation] " + key + ": expected two numbers");
    sc.spec.initial_positions[id] = {xy[0], xy[1]};
  }
  if (edge > 0.0) {
    // Equilateral shorthand: centroid at the origin, base parallel to x.
    double y_base = -edge / (2.0 * std::sqrt(3.0));
    double y_apex = edge / std::sqrt(3.0);
    sc.spec.initial_positions[sc.spec.leaders[0]] = {-edge / 2.0, y_base};
    sc.spec.initial_positions[sc.spec.leaders[1]] = {edge / 2.0, y_base};
    sc.spec.initial_positions[sc.spec.leaders[2]] = {0.0, y_apex};
  }
  for (int id : sc.spec.leaders) {
    if (!sc.spec.initial_positions.count(id)) {
      throw ParseError("[formation] missing position for leader " + std::to_string(id) +
                       " (set leader_triangle_edge_m or position_" + std::to_string(id) +
                       "_m)");
    }
  }

  for (int f : sc.spec.followers) {
    auto nbrs = formation.take_ints("neighbors_" + std::to_string(f));
    auto w = formation.take_doubles("weights_" + std::to_string(f));
    if (nbrs.size() != 3) {
      throw ParseError("[formation] neighbors_" + std::to_string(f) +
                       ": exactly 3 in-neighbors required");
    }
    if (w.size() != 3) {
      throw ParseError("[formation] weights_" + std::to_string(f) +
                       ": exactly 3 weights required");
    }
    sc.spec.topology[f] = {nbrs[0], nbrs[1], nbrs[2]};
    sc.spec.weights[f] = {w[0], w[1], w[2]};
  }

  bool derive = formation.take_bool("derive_follower_positions", true);
  if (derive && !sc.spec.followers.empty()) {
    std::map<int, Vec2> leader_pos;
    for (int id : sc.spec.leaders) leader_pos[id] = sc.spec.initial_positions.at(id);
    auto solved = derive_follower_positions(sc.spec.leaders, leader_pos, sc.spec.followers,
                                            sc.spec.topology, sc.spec.weights);
    for (const auto& [id, pos] : solved) sc.spec.initial_positions[id] = pos;
  }

  detail::SectionReader plan(raw, "plan");
  std::string variant = plan.take_string("variant", "contract_square");
  if (variant == "contract_square") {
    sc.plan.variant = PlanVariant::ContractSquare;
  } else if (variant == "square_vmax") {
    sc.plan.variant = PlanVariant::SquareVmax;
  } else {
    throw ParseError("[plan] variant: expected contract_square or square_vmax");
  }
  sc.plan.segment_duration_s = plan.take_double("segment_duration_s", 3.75);
  std::string contraction = plan.take_string("contraction", "auto");
  if (contraction == "auto") {
    sc.plan.contraction_auto = true;
  } else {
    sc.plan.contraction_auto = false;
    try {
      sc.plan.contraction = std::stod(contraction);
    } catch (const std::exception&) {
      throw ParseError("[plan] contraction: expected auto or a number");
    }
    if (!(sc.plan.contraction > 0.0)) {
      throw ParseError("[plan] contraction: must be > 0");
    }
  }
  sc.plan.square_edge_m = plan.take_double("square_edge_m", 1.0);
  sc.plan.v_max_mps = plan.take_double("v_max_mps", 0.5);
  sc.plan.intermediate_waypoint = plan.take_bool("intermediate_waypoint", false);
  if (!(sc.plan.segment_duration_s > 0.0)) {
    throw ParseError("[plan] segment_duration_s: must be > 0");
  }
  if (sc.plan.v_max_mps < 0.0) throw ParseError("[plan] v_max_mps: must be >= 0");

  detail::SectionReader followers(raw, "followers");
  std::string mode = followers.take_string("mode", "global_reference");
  if (mode == "global_reference") {
    sc.mode = FollowerMode::GlobalReference;
  } else if (mode == "local_communication") {
    sc.mode = FollowerMode::LocalCommunication;
  } else {
    throw ParseError("[followers] mode: expected global_reference or local_communication");
  }

  detail::SectionReader link(raw, "link");
  sc.link.rate = link.take_double("rate_hz", 60.0);
  sc.link.latency = link.take_double("latency_s", 0.040);
  sc.link.drop_probability = link.take_double("drop_probability", 0.0);
  sc.link.jitter_std = link.take_double("jitter_std_s", 0.0);
  sc.link.burst.enabled = link.take_bool("burst", false);
  sc.link.burst.p_good_to_bad = link.take_double("burst_p_good_to_bad", 0.0);
  sc.link.burst.p_bad_to_good = link.take_double("burst_p_bad_to_good", 1.0);
  sc.link.burst.drop_prob_bad = link.take_double("burst_drop_prob_bad", 1.0);
  if (!(sc.link.rate > 0.0)) throw ParseError("[link] rate_hz: must be > 0");
  if (sc.link.latency < 0.0) throw ParseError("[link] latency_s: must be >= 0");
  if (sc.link.drop_probability < 0.0 || sc.link.drop_probability > 1.0) {
    throw ParseError("[link] drop_probability: must be in [0, 1]");
  }
  if (sc.link.jitter_std < 0.0) throw ParseError("[link] jitter_std_s: must be >= 0");

  detail::SectionReader disturbance(raw, "disturbance");
  sc.disturbance.wind_speed_mps = disturbance.take_double("wind_speed_mps", 0.0);
  sc.disturbance.wind_heading_deg = disturbance.take_double("wind_heading_deg", 0.0);
  sc.disturbance.wind_accel_gain_per_s =
      disturbance.take_double("wind_accel_gain_per_s", 0.4);
  sc.disturbance.noise_std_mps2 = disturbance.take_double("noise_std_mps2", 0.0);
  if (sc.disturbance.noise_std_mps2 < 0.0) {
    throw ParseError("[disturbance] noise_std_mps2: must be >= 0");
  }

  detail::SectionReader gains(raw, "gains");
  sc.gains.kp_pos = gains.take_double("kp_pos_per_s", 1.0);
  sc.gains.kp_vel = gains.take_double("kp_vel_per_s", 2.0);
  sc.gains.ki_vel = gains.take_double("ki_vel_per_s2", 0.5);
  sc.gains.kd_vel = gains.take_double("kd_vel", 0.0);
  sc.gains.accel_limit = gains.take_double("accel_limit_mps2", 5.0);
  if (sc.gains.kp_pos < 0 || sc.gains.kp_vel < 0 || sc.gains.ki_vel < 0 ||
      sc.gains.kd_vel < 0) {
    throw ParseError("[gains] all gains must be >= 0");
  }
  if (!(sc.gains.accel_limit > 0.0)) {
    throw ParseError("[gains] accel_limit_mps2: must be > 0");
  }

  detail::SectionReader sim(raw, "sim");
  sc.sim.dt_s = sim.take_double("dt_s", 0.0025);
  sc.sim.master_seed = static_cast<std::uint64_t>(sim.take_long("master_seed", 1));
  sc.sim.warmup_exclude_s = sim.take_double("warmup_exclude_s", 1.0);
  sc.sim.certify_rate_hz = sim.take_double("certify_rate_hz", 100.0);
  sc.sim.stall_threshold_s = sim.take_double("stall_threshold_s", 0.3);
  sc.sim.stall_agent = static_cast<int>(sim.take_long("stall_agent", 0));
  sc.sim.stall_start_s = sim.take_double("stall_start_s", 0.0);
  sc.sim.stall_duration_s = sim.take_double("stall_duration_s", 0.0);
  sc.sim.altitude_m = sim.take_double("altitude_m", 1.5);
  if (!(sc.sim.dt_s > 0.0)) throw ParseError("[sim] dt_s: must be > 0");
  if (!(sc.sim.certify_rate_hz > 0.0)) throw ParseError("[sim] certify_rate_hz: must be > 0");
  if (sc.sim.warmup_exclude_s < 0.0) throw ParseError("[sim] warmup_exclude_s: must be >= 0");

  detail::SectionReader output(raw, "output");
  sc.output_directory = output.take_string("directory", "out");

  std::vector<std::string> unknown;
  for (auto* reader : {&formation, &plan, &followers, &link, &disturbance, &gains, &sim,
                       &output}) {
    for (const auto& k : reader->leftovers()) unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ParseError(msg);
  }

  sc.warnings = sc.spec.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

/// Canonical text form: every key explicit, positions resolved, stable key
/// order. Loading the output reproduces the same scenario.
inline std::string serialize_scenario(const Scenario& sc) {
  using detail::format_double;
  std::ostringstream os;
  os << "[formation]\n";
  os << "epsilon_m = " << format_double(sc.spec.epsilon_m) << "\n";
  os << "delta_m = " << format_double(sc.spec.delta_m) << "\n";
  os << "leaders =";
  for (int id : sc.spec.leaders) os << " " << id;
  os << "\nfollowers =";
  for (int id : sc.spec.followers) os << " " << id;
  os << "\n";
  for (const auto& [id, pos] : sc.spec.initial_positions) {
    os << "position_" << id << "_m = " << format_double(pos.x) << " "
       << format_double(pos.y) << "\n";
  }
  for (int f : sc.spec.followers) {
    const auto& n = sc.spec.topology.at(f);
    const auto& w = sc.spec.weights.at(f);
    os << "neighbors_" << f << " = " << n[0] << " " << n[1] << " " << n[2] << "\n";
    os << "weights_" << f << " = " << format_double(w[0]) << " " << format_double(w[1])
       << " " << format_double(w[2]) << "\n";
  }
  os << "derive_follower_positions = off\n";

  os << "\n[plan]\n";
  os << "variant = "
     << (sc.plan.variant == PlanVariant::ContractSquare ? "contract_square" : "square_vmax")
     << "\n";
  os << "segment_duration_s = " << format_double(sc.plan.segment_duration_s) << "\n";
  os << "contraction = "
     << (sc.plan.contraction_auto ? std::string("auto") : format_double(sc.plan.contraction))
     << "\n";
  os << "square_edge_m = " << format_double(sc.plan.square_edge_m) << "\n";
  os << "v_max_mps = " << format_double(sc.plan.v_max_mps) << "\n";
  os << "intermediate_waypoint = " << (sc.plan.intermediate_waypoint ? "on" : "off") << "\n";

  os << "\n[followers]\n";
  os << "mode = "
     << (sc.mode == FollowerMode::GlobalReference ? "global_reference"
                                                  : "local_communication")
     << "\n";

  os << "\n[link]\n";
  os << "rate_hz = " << format_double(sc.link.rate) << "\n";
  os << "latency_s = " << format_double(sc.link.latency) << "\n";
  os << "drop_probability = " << format_double(sc.link.drop_probability) << "\n";
  os << "jitter_std_s = " << format_double(sc.link.jitter_std) << "\n";
  os << "burst = " << (sc.link.burst.enabled ? "on" : "off") << "\n";
  os << "burst_p_good_to_bad = " << format_double(sc.link.burst.p_good_to_bad) << "\n";
  os << "burst_p_bad_to_good = " << format_double(sc.link.burst.p_bad_to_good) << "\n";
  os << "burst_drop_prob_bad = " << format_double(sc.link.burst.drop_prob_bad) << "\n";

  os << "\n[disturbance]\n";
  os << "wind_speed_mps = " << format_double(sc.disturbance.wind_speed_mps) << "\n";
  os << "wind_heading_deg = " << format_double(sc.disturbance.wind_heading_deg) << "\n";
  os << "wind_accel_gain_per_s = " << format_double(sc.disturbance.wind_accel_gain_per_s)
     << "\n";
  os << "noise_std_mps2 = " << format_double(sc.disturbance.noise_std_mps2) << "\n";

  os << "\n[gains]\n";
  os << "kp_pos_per_s = " << format_double(sc.gains.kp_pos) << "\n";
  os << "kp_vel_per_s = " << format_double(sc.gains.kp_vel) << "\n";
  os << "ki_vel_per_s2 = " << format_double(sc.gains.ki_vel) << "\n";
  os << "kd_vel = " << format_double(sc.gains.kd_vel) << "\n";
  os << "accel_limit_mps2 = " << format_double(sc.gains.accel_limit) << "\n";

  os << "\n[sim]\n";
  os << "dt_s = " << format_double(sc.sim.dt_s) << "\n";
  os << "master_seed = " << sc.sim.master_seed << "\n";
  os << "warmup_exclude_s = " << format_double(sc.sim.warmup_exclude_s) << "\n";
  os << "certify_rate_hz = " << format_double(sc.sim.certify_rate_hz) << "\n";
  os << "stall_threshold_s = " << format_double(sc.sim.stall_threshold_s) << "\n";
  os << "stall_agent = " << sc.sim.stall_agent << "\n";
  os << "stall_start_s = " << format_double(sc.sim.stall_start_s) << "\n";
  os << "stall_duration_s = " << format_double(sc.sim.stall_duration_s) << "\n";
  os << "altitude_m = " << format_double(sc.sim.altitude_m) << "\n";

  os << "\n[output]\n";
  os << "directory = " << sc.output_directory << "\n";
  return os.str();
}

/// Resolves the leader plan, computing the contraction floor when set to auto.
inline LeaderPlan make_plan(const Scenario& sc) {
  if (sc.plan.variant == PlanVariant::SquareVmax) {
    return square_mission(sc.spec, sc.plan.v_max_mps, sc.plan.segment_duration_s);
  }
  double scale = sc.plan.contraction;
  if (sc.plan.contraction_auto) scale = compute_margins(sc.spec).lambda_min;
  return contraction_square_mission(sc.spec, sc.plan.segment_duration_s, scale,
                                    sc.plan.square_edge_m, sc.plan.intermediate_waypoint);
}

}  // namespace contdef
