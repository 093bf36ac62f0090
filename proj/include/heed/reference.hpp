#pragma once

#include <optional>

#include "heed/geometry.hpp"
#include "heed/voxel_grid.hpp"

namespace heed::ref {

/// Serial reference kernels. These take the straight-line route with no
/// acceleration structure and no threading; tests and the benchmark compare
/// the production kernels against them.

/// Exhaustive triangle-by-voxel separating-axis loop.
VoxelGrid voxelize_exhaustive(const TriangleMesh& mesh, GridDims dims);

/// Nearest ray hit by scanning every triangle; ties on t keep the smaller id.
std::optional<RayHit> nearest_hit_scan(const TriangleMesh& mesh, const Ray& ray);

}  // namespace heed::ref
