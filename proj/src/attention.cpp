#include "heed/attention.hpp"

#include <cmath>

#include "heed/util.hpp"

namespace heed {

void CaptureConfig::validate() const {
  if (half_life <= 0) throw ValidationError("half_life must be > 0");
  if (capture_rate_hz <= 0) throw ValidationError("capture_rate_hz must be > 0");
  if (influence_radius < 0) throw ValidationError("influence_radius must be >= 0");
  if (falloff_exponent < 0) throw ValidationError("falloff_exponent must be >= 0");
  if (center_increment <= 0) throw ValidationError("center_increment must be > 0");
  if (epsilon_floor < 0) throw ValidationError("epsilon_floor must be >= 0");
}

AttentionMap::AttentionMap(UserId user, const VoxelGrid* grid, const CaptureConfig& cfg)
    : user_(user), grid_(grid), half_life_(cfg.half_life), floor_(cfg.epsilon_floor) {
  cfg.validate();
}

void AttentionMap::apply_delta(VoxelIndex v, double delta, double t) {
  auto [it, fresh] = records_.try_emplace(grid_->linear(v));
  Record& r = it->second;
  if (fresh) {
    r.raw = delta;
    r.last_update = t;
  } else {
    if (t < r.last_update) throw ValidationError("clock regression in apply_delta");
    double decayed = r.raw * decay_factor(t - r.last_update, half_life_);
    if (decayed < floor_) decayed = 0.0;
    r.raw = decayed + delta;
    r.last_update = t;
  }
  if (t > latest_) latest_ = t;
}

double AttentionMap::materialize(const Record& r, double t) const {
  if (t < r.last_update) throw ValidationError("clock regression in read");
  const double v = r.raw * decay_factor(t - r.last_update, half_life_);
  return v < floor_ ? 0.0 : v;
}

double AttentionMap::effective_value(VoxelIndex v, double t) const {
  const auto it = records_.find(grid_->linear(v));
  if (it == records_.end()) return 0.0;
  return materialize(it->second, t);
}

std::vector<double> AttentionMap::snapshot(double t) const {
  if (t < latest_) throw ValidationError("clock regression in snapshot");
  std::vector<double> field(grid_->dims().volume(), 0.0);
  for (const auto& [lin, rec] : records_) field[lin] = materialize(rec, t);
  return field;
}

std::vector<VoxelDelta> capture(AttentionMap& map, const VoxelGrid& grid,
                                const GazeSample& sample, const CaptureConfig& cfg) {
  cfg.validate();
  if (sample.time < map.latest_update()) {
    throw ValidationError("capture sample precedes the map's latest update");
  }

  std::vector<VoxelDelta> deltas;
  if (cfg.mode == CaptureMode::kDataAgnostic) {
    for (const VoxelIndex& v : traverse_ray(grid, sample.ray)) {
      deltas.emplace_back(v, cfg.center_increment);
    }
  } else {
    const auto center = nearest_active_hit(grid, sample.ray);
    if (!center) return {};
    if (cfg.influence_radius <= 0) {
      deltas.emplace_back(*center, cfg.center_increment);
    } else {
      const Point3 center_point = grid.voxel_center(*center);
      for (const VoxelIndex& v : voxels_in_sphere(grid, center_point, cfg.influence_radius)) {
        if (!grid.is_active(v)) continue;  // attention lands on geometry only
        double delta;
        if (v == *center) {
          delta = cfg.center_increment;
        } else {
          const double d = length(grid.voxel_center(v) - center_point);
          const double falloff = std::pow(1.0 - d / cfg.influence_radius, cfg.falloff_exponent);
          delta = cfg.center_increment * falloff;
        }
        if (delta > 0) deltas.emplace_back(v, delta);
      }
    }
  }

  for (const auto& [v, delta] : deltas) map.apply_delta(v, delta, sample.time);
  return deltas;
}

}  // namespace heed
