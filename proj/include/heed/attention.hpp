#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "heed/geometry.hpp"
#include "heed/voxel_grid.hpp"

namespace heed {

using UserId = uint32_t;

/// One pose sample: view position plus gaze (or head-forward) direction.
struct GazeSample {
  UserId user = 0;
  double time = 0;  // seconds since session start
  Ray ray;
};

enum class CaptureMode { kDataAware, kDataAgnostic };

struct CaptureConfig {
  CaptureMode mode = CaptureMode::kDataAware;
  double influence_radius = 0.0;    // meters; 0 = single voxel
  double center_increment = 1.0;    // attention units per capture tick
  double falloff_exponent = 1.0;    // (1 - d/r)^e falloff inside the sphere
  double half_life = 60.0;          // seconds
  double capture_rate_hz = 10.0;
  double epsilon_floor = 1e-6;      // decayed values below this clamp to zero

  void validate() const;
};

/// Exponential decay factor over dt seconds.
inline double decay_factor(double dt, double half_life) {
  return std::exp2(-dt / half_life);
}

/// One user's attention accumulator over a grid. Stores raw values with their
/// last update time; decay is materialized lazily on reads and touches.
/// Exactly one writer per map (the owning user's capture stream).
class AttentionMap {
 public:
  struct Record {
    double raw = 0;
    double last_update = 0;
  };

  AttentionMap(UserId user, const VoxelGrid* grid, const CaptureConfig& cfg);

  UserId user() const { return user_; }
  const VoxelGrid& grid() const { return *grid_; }
  double latest_update() const { return latest_; }
  size_t touched_count() const { return records_.size(); }

  /// Decays the record to time t, clamps below the floor, then adds delta.
  /// This is the single arithmetic path shared by local capture and remote
  /// mirror application, so identical input sequences yield identical bits.
  void apply_delta(VoxelIndex v, double delta, double t);

  /// raw * 2^(-(t - last_update)/half_life); below the floor reports 0.
  /// Throws ValidationError when t precedes the record (clock regression).
  double effective_value(VoxelIndex v, double t) const;

  /// Dense field of effective values at time t; untouched voxels are 0.
  std::vector<double> snapshot(double t) const;

  const std::unordered_map<uint64_t, Record>& records() const { return records_; }

 private:
  double materialize(const Record& r, double t) const;

  UserId user_;
  const VoxelGrid* grid_;
  double half_life_;
  double floor_;
  double latest_ = 0;
  std::unordered_map<uint64_t, Record> records_;
};

using VoxelDelta = std::pair<VoxelIndex, double>;

/// Applies one gaze sample to the map and returns the applied deltas (the
/// pending-sync record). Data-aware: the nearest active voxel anchors a
/// spherical region of influence whose center receives the full increment and
/// whose other voxels fall off with distance; radius 0 touches the center
/// only. Data-agnostic: every voxel the ray passes through gets the full
/// increment. A miss returns an empty list and leaves the map unchanged.
std::vector<VoxelDelta> capture(AttentionMap& map, const VoxelGrid& grid,
                                const GazeSample& sample, const CaptureConfig& cfg);

}  // namespace heed
