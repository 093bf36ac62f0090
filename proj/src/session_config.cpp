#include <fstream>
#include <map>
#include <sstream>

#include "heed/session.hpp"
#include "heed/util.hpp"

namespace heed {

const char* environment_name(EnvironmentKind kind) {
  return kind == EnvironmentKind::kTerrain ? "terrain" : "scatterplot";
}

const char* condition_name(ConditionKind kind) {
  return kind == ConditionKind::kCaav ? "CAAV" : "no_CAAV";
}

const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kScripted: return "scripted";
    case PolicyKind::kRandomScan: return "random_scan";
    case PolicyKind::kCoordinated: return "coordinated";
  }
  return "?";
}

void SessionConfig::validate() const {
  capture.validate();
  if (target_fraction <= 0 || target_fraction > 1) {
    throw ValidationError("target_fraction must be in (0, 1]");
  }
  if (duration <= 0) throw ValidationError("duration must be > 0");
  if (proximity < 0) throw ValidationError("proximity must be >= 0");
  if (facing_cone_deg <= 0 || facing_cone_deg > 180) {
    throw ValidationError("facing_cone_deg must be in (0, 180]");
  }
  if (sync_interval_ms <= 0) throw ValidationError("sync_interval_ms must be > 0");
  if (network.latency_min_ms < 0 || network.latency_max_ms < network.latency_min_ms) {
    throw ValidationError("latency range invalid");
  }
  if (network.duplication_rate < 0 || network.duplication_rate >= 1) {
    throw ValidationError("duplication_rate must be in [0, 1)");
  }
  if (explored_threshold < 0) throw ValidationError("explored_threshold must be >= 0");
  if (opacity_v_max <= explored_threshold) {
    throw ValidationError("opacity_v_max must exceed explored_threshold");
  }
  if (!dims_auto && (dims.nx == 0 || dims.ny == 0 || dims.nz == 0)) {
    throw ValidationError("dims must be >= 1 per axis");
  }
  for (size_t u = 0; u < 2; ++u) {
    if (policy[u] == PolicyKind::kScripted && waypoints[u].empty()) {
      throw ValidationError("scripted policy needs waypoints");
    }
  }
}

RevisConfig SessionConfig::revis_config() const {
  RevisConfig revis;
  revis.threshold = explored_threshold;
  revis.v_max = opacity_v_max;
  return revis;
}

namespace {

std::string waypoints_text(const std::vector<Waypoint>& wps) {
  std::string out;
  for (size_t n = 0; n < wps.size(); ++n) {
    if (n) out += "; ";
    const Waypoint& w = wps[n];
    out += fmt_g17(w.position.x) + ' ' + fmt_g17(w.position.y) + ' ' + fmt_g17(w.position.z) +
           ' ' + fmt_g17(w.look_at.x) + ' ' + fmt_g17(w.look_at.y) + ' ' +
           fmt_g17(w.look_at.z) + ' ' + fmt_g17(w.hold_s);
  }
  return out;
}

std::vector<Waypoint> parse_waypoints(const std::string& text) {
  std::vector<Waypoint> out;
  std::istringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::istringstream gs(group);
    Waypoint w;
    if (!(gs >> w.position.x >> w.position.y >> w.position.z >> w.look_at.x >> w.look_at.y >>
          w.look_at.z >> w.hold_s)) {
      throw ValidationError("bad waypoint: " + group);
    }
    out.push_back(w);
  }
  return out;
}

}  // namespace

std::string SessionConfig::canonical_text() const {
  std::string out;
  out += "heed-config v1\n";
  out += std::string("environment = ") + environment_name(environment.kind) + '\n';
  out += std::string("condition = ") + condition_name(condition) + '\n';
  out += "seed = " + std::to_string(seed) + '\n';
  out += "duration_s = " + fmt_g17(duration) + '\n';
  out += "capture_rate_hz = " + fmt_g17(capture.capture_rate_hz) + '\n';
  if (dims_auto) {
    out += "dims = auto\n";
  } else {
    out += "dims = " + std::to_string(dims.nx) + ' ' + std::to_string(dims.ny) + ' ' +
           std::to_string(dims.nz) + '\n';
  }
  out += "target_fraction = " + fmt_g17(target_fraction) + '\n';
  out += "proximity_m = " + fmt_g17(proximity) + '\n';
  out += "facing_cone_deg = " + fmt_g17(facing_cone_deg) + '\n';
  out += std::string("capture_mode = ") +
         (capture.mode == CaptureMode::kDataAware ? "data_aware" : "data_agnostic") + '\n';
  out += "influence_radius_m = " + fmt_g17(capture.influence_radius) + '\n';
  out += "center_increment = " + fmt_g17(capture.center_increment) + '\n';
  out += "falloff_exponent = " + fmt_g17(capture.falloff_exponent) + '\n';
  out += "half_life_s = " + fmt_g17(capture.half_life) + '\n';
  out += "epsilon_floor = " + fmt_g17(capture.epsilon_floor) + '\n';
  out += "sync_interval_ms = " + fmt_g17(sync_interval_ms) + '\n';
  out += "latency_min_ms = " + fmt_g17(network.latency_min_ms) + '\n';
  out += "latency_max_ms = " + fmt_g17(network.latency_max_ms) + '\n';
  out += std::string("in_order = ") + (network.per_sender_in_order ? "1" : "0") + '\n';
  out += "duplication_rate = " + fmt_g17(network.duplication_rate) + '\n';
  out += "explored_threshold = " + fmt_g17(explored_threshold) + '\n';
  out += "opacity_v_max = " + fmt_g17(opacity_v_max) + '\n';
  out += std::string("policy_user0 = ") + policy_name(policy[0]) + '\n';
  out += std::string("policy_user1 = ") + policy_name(policy[1]) + '\n';
  for (size_t u = 0; u < 2; ++u) {
    if (!waypoints[u].empty()) {
      out += "waypoints_user" + std::to_string(u) + " = " + waypoints_text(waypoints[u]) + '\n';
    }
  }
  out += "terrain_n = " + std::to_string(environment.terrain_n) + '\n';
  out += "terrain_extent_m = " + fmt_g17(environment.terrain_extent) + '\n';
  out += "terrain_amplitude_m = " + fmt_g17(environment.terrain_amplitude) + '\n';
  out += "scatter_points = " + std::to_string(environment.scatter_points) + '\n';
  out += "glyph_radius_m = " + fmt_g17(environment.glyph_radius) + '\n';
  out += "scatter_extent_m = " + fmt_g17(environment.scatter_extent) + '\n';
  return out;
}

uint64_t SessionConfig::digest() const { return fnv1a64(canonical_text()); }

namespace {

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ValidationError("config " + key + ": bad number '" + value + "'");
  }
  return v;
}

uint64_t to_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ValidationError("config " + key + ": bad integer '" + value + "'");
  }
  return v;
}

PolicyKind to_policy(const std::string& key, const std::string& value) {
  if (value == "scripted") return PolicyKind::kScripted;
  if (value == "random_scan") return PolicyKind::kRandomScan;
  if (value == "coordinated") return PolicyKind::kCoordinated;
  throw ValidationError("config " + key + ": unknown policy '" + value + "'");
}

}  // namespace

ConfigFile parse_config(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "heed-config v1") {
    throw ValidationError("config schema-version mismatch");
  }

  ConfigFile file;
  SessionConfig& cfg = file.base;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const size_t last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t b = s.find_first_not_of(" \t");
      const size_t e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);

    if (key == "environment") {
      if (value == "terrain") {
        cfg.environment.kind = EnvironmentKind::kTerrain;
      } else if (value == "scatterplot") {
        cfg.environment.kind = EnvironmentKind::kScatterplot;
      } else if (value == "both") {
        file.env_both = true;
      } else {
        throw ValidationError("config environment: unknown value '" + value + "'");
      }
    } else if (key == "condition") {
      if (value == "CAAV") {
        cfg.condition = ConditionKind::kCaav;
      } else if (value == "no_CAAV") {
        cfg.condition = ConditionKind::kNoCaav;
      } else if (value == "both") {
        file.cond_both = true;
      } else {
        throw ValidationError("config condition: unknown value '" + value + "'");
      }
    } else if (key == "seed") {
      cfg.seed = to_u64(key, value);
    } else if (key == "duration_s") {
      cfg.duration = to_double(key, value);
    } else if (key == "capture_rate_hz") {
      cfg.capture.capture_rate_hz = to_double(key, value);
    } else if (key == "dims") {
      if (value == "auto") {
        cfg.dims_auto = true;
      } else {
        std::istringstream ds(value);
        if (!(ds >> cfg.dims.nx >> cfg.dims.ny >> cfg.dims.nz)) {
          throw ValidationError("config dims: expected 'auto' or 'nx ny nz'");
        }
        cfg.dims_auto = false;
      }
    } else if (key == "target_fraction") {
      cfg.target_fraction = to_double(key, value);
    } else if (key == "proximity_m") {
      cfg.proximity = to_double(key, value);
    } else if (key == "facing_cone_deg") {
      cfg.facing_cone_deg = to_double(key, value);
    } else if (key == "capture_mode") {
      if (value == "data_aware") {
        cfg.capture.mode = CaptureMode::kDataAware;
      } else if (value == "data_agnostic") {
        cfg.capture.mode = CaptureMode::kDataAgnostic;
      } else {
        throw ValidationError("config capture_mode: unknown value '" + value + "'");
      }
    } else if (key == "influence_radius_m") {
      cfg.capture.influence_radius = to_double(key, value);
    } else if (key == "center_increment") {
      cfg.capture.center_increment = to_double(key, value);
    } else if (key == "falloff_exponent") {
      cfg.capture.falloff_exponent = to_double(key, value);
    } else if (key == "half_life_s") {
      cfg.capture.half_life = to_double(key, value);
    } else if (key == "epsilon_floor") {
      cfg.capture.epsilon_floor = to_double(key, value);
    } else if (key == "sync_interval_ms") {
      cfg.sync_interval_ms = to_double(key, value);
    } else if (key == "latency_min_ms") {
      cfg.network.latency_min_ms = to_double(key, value);
    } else if (key == "latency_max_ms") {
      cfg.network.latency_max_ms = to_double(key, value);
    } else if (key == "in_order") {
      cfg.network.per_sender_in_order = to_u64(key, value) != 0;
    } else if (key == "duplication_rate") {
      cfg.network.duplication_rate = to_double(key, value);
    } else if (key == "explored_threshold") {
      cfg.explored_threshold = to_double(key, value);
    } else if (key == "opacity_v_max") {
      cfg.opacity_v_max = to_double(key, value);
    } else if (key == "policy_user0") {
      cfg.policy[0] = to_policy(key, value);
    } else if (key == "policy_user1") {
      cfg.policy[1] = to_policy(key, value);
    } else if (key == "waypoints_user0") {
      cfg.waypoints[0] = parse_waypoints(value);
    } else if (key == "waypoints_user1") {
      cfg.waypoints[1] = parse_waypoints(value);
    } else if (key == "terrain_n") {
      cfg.environment.terrain_n = static_cast<uint32_t>(to_u64(key, value));
    } else if (key == "terrain_extent_m") {
      cfg.environment.terrain_extent = to_double(key, value);
    } else if (key == "terrain_amplitude_m") {
      cfg.environment.terrain_amplitude = to_double(key, value);
    } else if (key == "scatter_points") {
      cfg.environment.scatter_points = static_cast<uint32_t>(to_u64(key, value));
    } else if (key == "glyph_radius_m") {
      cfg.environment.glyph_radius = to_double(key, value);
    } else if (key == "scatter_extent_m") {
      cfg.environment.scatter_extent = to_double(key, value);
    } else {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                            "'");
    }
  }
  return file;
}

ConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  return parse_config(in);
}

SessionConfig parse_single_config_text(const std::string& text) {
  std::istringstream in(text);
  const ConfigFile file = parse_config(in);
  if (file.env_both || file.cond_both) {
    throw ValidationError("embedded config must be a single cell");
  }
  return file.base;
}

std::vector<SessionConfig> ConfigFile::expand() const {
  std::vector<EnvironmentKind> envs =
      env_both ? std::vector<EnvironmentKind>{EnvironmentKind::kScatterplot,
                                              EnvironmentKind::kTerrain}
               : std::vector<EnvironmentKind>{base.environment.kind};
  std::vector<ConditionKind> conds =
      cond_both ? std::vector<ConditionKind>{ConditionKind::kCaav, ConditionKind::kNoCaav}
                : std::vector<ConditionKind>{base.condition};
  std::vector<SessionConfig> cells;
  for (EnvironmentKind env : envs) {
    for (ConditionKind cond : conds) {
      SessionConfig cell = base;
      cell.environment.kind = env;
      cell.condition = cond;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace heed
