#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heed/attention.hpp"
#include "heed/bvh.hpp"
#include "heed/geometry.hpp"
#include "heed/metrics.hpp"
#include "heed/sync.hpp"
#include "heed/team_view.hpp"
#include "heed/trace.hpp"
#include "heed/voxel_grid.hpp"

namespace heed {

enum class EnvironmentKind { kTerrain, kScatterplot };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::kScatterplot;
  // Terrain: (n x n) fractal heightfield over a square footprint.
  uint32_t terrain_n = 33;
  double terrain_extent = 1.6;     // meters per side
  double terrain_amplitude = 0.5;  // peak height; 0 gives a flat plane
  // Scatterplot: icosahedral glyphs at seeded positions in a cube.
  uint32_t scatter_points = 100;
  double glyph_radius = 0.03;
  double scatter_extent = 1.0;
};

enum class ConditionKind { kCaav, kNoCaav };
enum class PolicyKind { kScripted, kRandomScan, kCoordinated };

struct Waypoint {
  Point3 position;
  Point3 look_at;
  double hold_s = 1.0;
};

/// Full description of one two-user session. Everything that affects the run
/// is in here plus the master seed, so (config, seed) determines the trace.
struct SessionConfig {
  EnvironmentSpec environment;
  ConditionKind condition = ConditionKind::kCaav;
  GridDims dims;          // ignored when dims_auto
  bool dims_auto = true;  // proportional dims, longest axis 64
  double target_fraction = 0.05;
  double proximity = 0.10;         // max ray-to-target distance, meters
  double facing_cone_deg = 30.0;   // max angle between gaze and target direction
  double duration = 600.0;         // seconds
  CaptureConfig capture;
  double sync_interval_ms = 300.0;
  NetworkModel network;
  double explored_threshold = 0.05;
  double opacity_v_max = 10.0;
  std::array<PolicyKind, 2> policy = {PolicyKind::kCoordinated, PolicyKind::kCoordinated};
  std::array<std::vector<Waypoint>, 2> waypoints;
  uint64_t seed = 1;

  void validate() const;
  /// Fixed-order key-value form; embedded in traces and used for digests.
  std::string canonical_text() const;
  uint64_t digest() const;
  RevisConfig revis_config() const;
};

/// A config file before expansion: environment and condition may each be
/// "both", yielding up to four concrete cells.
struct ConfigFile {
  SessionConfig base;
  bool env_both = false;
  bool cond_both = false;

  std::vector<SessionConfig> expand() const;
};

ConfigFile parse_config(std::istream& in);
ConfigFile parse_config_file(const std::string& path);
SessionConfig parse_single_config_text(const std::string& text);

const char* environment_name(EnvironmentKind kind);
const char* condition_name(ConditionKind kind);
const char* policy_name(PolicyKind kind);

/// Deterministic mesh for the configured environment and seed.
TriangleMesh generate_environment(const EnvironmentSpec& spec, uint64_t seed);

struct Target {
  VoxelIndex voxel;
  Point3 center;  // voxel center projected onto the mesh surface
  std::optional<UserId> discovered_by;
  std::optional<double> discovery_time;
};

/// floor(fraction * |active|) distinct active voxels by seeded sampling,
/// returned in i-major voxel order. Throws when the fraction rounds to zero.
std::vector<Target> place_targets(const VoxelGrid& grid, double fraction, uint64_t seed,
                                  const TriangleMesh& mesh);

struct DiscoveryRule {
  double proximity = 0.10;
  double facing_cone_deg = 30.0;
};

/// Indices of targets this sample reveals: in front of the viewer, ray
/// passing within the proximity distance, direction within the facing cone,
/// not yet discovered. Marks them discovered in place, ascending index.
std::vector<uint32_t> check_discovery(const GazeSample& sample, std::vector<Target>& targets,
                                      const DiscoveryRule& rule);

struct SessionResult {
  Trace trace;
  MetricsReport report;
};

/// Fixed-timestep two-user run: per tick each agent emits a pose sample,
/// captures into its own map and checks discovery; batches flush on the sync
/// interval and arrive with seeded latency. Returns the trace and its report.
SessionResult run_session(const SessionConfig& cfg);

/// Re-executes a trace mechanically (agent decisions and delivery times come
/// from the recorded events, everything else is recomputed and cross-checked)
/// and returns the report. A truncated trace yields a report for the prefix,
/// flagged partial. Throws ValidationError on any inconsistency.
MetricsReport replay(const Trace& trace);

}  // namespace heed
