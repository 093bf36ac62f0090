#include "heed/reference.hpp"

namespace heed::ref {

VoxelGrid voxelize_exhaustive(const TriangleMesh& mesh, GridDims dims) {
  validate_mesh(mesh);
  VoxelGrid grid(padded_grid_bounds(mesh_bounds(mesh)), dims);
  for (uint32_t i = 0; i < dims.nx; ++i) {
    for (uint32_t j = 0; j < dims.ny; ++j) {
      for (uint32_t k = 0; k < dims.nz; ++k) {
        const VoxelIndex v{i, j, k};
        const Aabb box = grid.voxel_bounds(v);
        for (size_t t = 0; t < mesh.triangle_count(); ++t) {
          if (triangle_aabb_overlap(mesh.triangle(t), box)) {
            grid.set_active(v);
            break;
          }
        }
      }
    }
  }
  return grid;
}

std::optional<RayHit> nearest_hit_scan(const TriangleMesh& mesh, const Ray& ray) {
  std::optional<RayHit> best;
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto hit = ray_triangle(ray, mesh.triangle(t));
    if (!hit) continue;
    if (!best || *hit < best->t) best = RayHit{*hit, static_cast<uint32_t>(t)};
  }
  return best;
}

}  // namespace heed::ref
