#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "heed/voxel_grid.hpp"

namespace heed {

enum class AggregationMethod { kSum, kMax, kDifference, kCount };

/// How team attention is presented: the explored threshold, the value at
/// which opacity saturates, per-user color labels, and per-user trigger
/// state for the explicit reveal toggle.
struct RevisConfig {
  double threshold = 0.05;        // attention units; below this a voxel is unexplored
  double v_max = 10.0;            // attention units mapping to full opacity
  bool continuous_blend = false;  // blend colors by weight instead of 4 classes
  std::map<uint32_t, std::string> user_colors = {{0, "blue"}, {1, "orange"}};
  std::map<uint32_t, bool> triggered;

  void validate() const;
};

enum class VoxelClass : uint8_t { kUnexplored = 0, kSelfOnly = 1, kPartnerOnly = 2, kBoth = 3 };

const char* voxel_class_name(VoxelClass c);

/// Combines per-user fields over the same grid into one team field:
/// sum, max, max-min (difference) or the number of users with a nonzero
/// value (count). Fields must have equal length.
std::vector<double> aggregate(const std::vector<std::vector<double>>& fields,
                              AggregationMethod method);

/// Two-user explored/unexplored classification against cfg.threshold.
std::vector<VoxelClass> classify(const std::vector<double>& local,
                                 const std::vector<double>& partner, const RevisConfig& cfg);

/// 0 below the threshold, then linear up to 1 at v_max.
double opacity(double v, const RevisConfig& cfg);

/// Fraction of active voxels whose field value is >= threshold.
double coverage_fraction(const std::vector<double>& field, const VoxelGrid& grid,
                         double threshold);

/// Per-user color weights in [0,1] for the continuous blend mode; weight is
/// each user's share of the summed attention, zero when below threshold.
std::vector<std::vector<double>> blend_weights(const std::vector<std::vector<double>>& fields,
                                               const RevisConfig& cfg);

/// Columnar export of active voxels: index, class, opacity and the per-user
/// effective values, i-major order.
void write_revis(std::ostream& out, const VoxelGrid& grid, const std::vector<double>& local,
                 const std::vector<double>& partner, const RevisConfig& cfg);

}  // namespace heed
