#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "heed/bvh.hpp"
#include "heed/geometry.hpp"

namespace heed {

struct VoxelIndex {
  uint32_t i = 0, j = 0, k = 0;
  friend bool operator==(VoxelIndex a, VoxelIndex b) {
    return a.i == b.i && a.j == b.j && a.k == b.k;
  }
  friend bool operator<(VoxelIndex a, VoxelIndex b) {
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  }
};

struct GridDims {
  uint32_t nx = 1, ny = 1, nz = 1;
  uint64_t volume() const { return uint64_t(nx) * ny * nz; }
  friend bool operator==(GridDims a, GridDims b) {
    return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz;
  }
};

/// Discretization of a bounding volume into nx*ny*nz voxels with a set of
/// active voxels (the ones touching geometry). Immutable once built; all
/// queries are read-only.
class VoxelGrid {
 public:
  VoxelGrid(Aabb bounds, GridDims dims);

  const Aabb& bounds() const { return bounds_; }
  GridDims dims() const { return dims_; }
  Vec3 voxel_size() const { return voxel_size_; }

  uint64_t linear(VoxelIndex v) const {
    return (uint64_t(v.i) * dims_.ny + v.j) * dims_.nz + v.k;
  }
  VoxelIndex from_linear(uint64_t n) const {
    const uint32_t k = static_cast<uint32_t>(n % dims_.nz);
    const uint32_t j = static_cast<uint32_t>((n / dims_.nz) % dims_.ny);
    const uint32_t i = static_cast<uint32_t>(n / (uint64_t(dims_.nz) * dims_.ny));
    return {i, j, k};
  }
  bool in_range(VoxelIndex v) const {
    return v.i < dims_.nx && v.j < dims_.ny && v.k < dims_.nz;
  }

  Aabb voxel_bounds(VoxelIndex v) const {
    const Point3 lo{bounds_.min.x + v.i * voxel_size_.x, bounds_.min.y + v.j * voxel_size_.y,
                    bounds_.min.z + v.k * voxel_size_.z};
    const Point3 hi{bounds_.min.x + (v.i + 1) * voxel_size_.x,
                    bounds_.min.y + (v.j + 1) * voxel_size_.y,
                    bounds_.min.z + (v.k + 1) * voxel_size_.z};
    return {lo, hi};
  }
  Point3 voxel_center(VoxelIndex v) const {
    return {bounds_.min.x + (v.i + 0.5) * voxel_size_.x,
            bounds_.min.y + (v.j + 0.5) * voxel_size_.y,
            bounds_.min.z + (v.k + 0.5) * voxel_size_.z};
  }

  /// Voxel containing p, or nothing when p lies outside the bounds.
  std::optional<VoxelIndex> locate(Point3 p) const;

  bool is_active(VoxelIndex v) const { return active_[linear(v)] != 0; }
  uint64_t active_count() const { return active_count_; }
  void set_active(VoxelIndex v);

  /// Active voxels in i-major order (stable for export and diffing).
  std::vector<VoxelIndex> active_indices() const;

  /// Proportional resolution: the longest bounds axis gets longest_axis
  /// voxels, the others scale by extent (rounded up, at least 1).
  static GridDims proportional_dims(const Aabb& bounds, uint32_t longest_axis = 64);

 private:
  friend VoxelGrid voxelize(const TriangleMesh&, const Bvh&, GridDims);
  Aabb bounds_;
  GridDims dims_;
  Vec3 voxel_size_;
  std::vector<uint8_t> active_;
  uint64_t active_count_ = 0;
};

/// Mesh bounds padded by 0.5% per axis so boundary faces do not sit exactly
/// on voxel boundaries. Flat axes fall back to 0.5% of the longest extent.
Aabb padded_grid_bounds(const Aabb& mesh_bounds);

/// Marks exactly the voxels whose box overlaps some triangle (separating-axis
/// test, no conservative slack). Parallel over voxels; candidate triangles
/// come from box queries against the hierarchy.
VoxelGrid voxelize(const TriangleMesh& mesh, const Bvh& bvh, GridDims dims);

/// Every voxel the ray passes through inside the bounds, in increasing ray
/// parameter order. Consecutive indices differ in exactly one axis; on exact
/// edge or corner crossings the step order is x, then y, then z.
std::vector<VoxelIndex> traverse_ray(const VoxelGrid& grid, const Ray& ray);

/// First active voxel along the ray, or nothing.
std::optional<VoxelIndex> nearest_active_hit(const VoxelGrid& grid, const Ray& ray);

/// Voxels whose center lies within radius of the given point. Radius 0 means
/// the voxel containing the point (when inside bounds).
std::vector<VoxelIndex> voxels_in_sphere(const VoxelGrid& grid, Point3 center, double radius);

/// Debug export: dims, bounds and active indices in i-major order.
void write_grid_text(std::ostream& out, const VoxelGrid& grid);

}  // namespace heed
