#include "heed/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "heed/util.hpp"

namespace heed {

VoxelGrid::VoxelGrid(Aabb bounds, GridDims dims) : bounds_(bounds), dims_(dims) {
  if (!bounds.valid()) throw ValidationError("grid bounds invalid");
  if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) throw ValidationError("grid dims must be >= 1");
  const Vec3 ext = bounds.extents();
  if (ext.x <= 0 || ext.y <= 0 || ext.z <= 0) throw ValidationError("grid bounds must have volume");
  voxel_size_ = {ext.x / dims.nx, ext.y / dims.ny, ext.z / dims.nz};
  active_.assign(dims.volume(), 0);
}

std::optional<VoxelIndex> VoxelGrid::locate(Point3 p) const {
  if (!bounds_.contains(p)) return std::nullopt;
  auto clamp_axis = [](double v, uint32_t n) {
    const double f = std::floor(v);
    const long long i = static_cast<long long>(f);
    return static_cast<uint32_t>(std::clamp(i, 0ll, static_cast<long long>(n) - 1));
  };
  return VoxelIndex{clamp_axis((p.x - bounds_.min.x) / voxel_size_.x, dims_.nx),
                    clamp_axis((p.y - bounds_.min.y) / voxel_size_.y, dims_.ny),
                    clamp_axis((p.z - bounds_.min.z) / voxel_size_.z, dims_.nz)};
}

void VoxelGrid::set_active(VoxelIndex v) {
  if (!in_range(v)) throw ValidationError("voxel index out of range");
  uint8_t& slot = active_[linear(v)];
  if (!slot) {
    slot = 1;
    ++active_count_;
  }
}

std::vector<VoxelIndex> VoxelGrid::active_indices() const {
  std::vector<VoxelIndex> out;
  out.reserve(active_count_);
  for (uint64_t n = 0; n < active_.size(); ++n) {
    if (active_[n]) out.push_back(from_linear(n));
  }
  return out;
}

GridDims VoxelGrid::proportional_dims(const Aabb& bounds, uint32_t longest_axis) {
  const Vec3 ext = bounds.extents();
  const double longest = std::max({ext.x, ext.y, ext.z});
  if (longest <= 0) throw ValidationError("bounds have no extent");
  auto axis_dims = [&](double e) {
    const double n = std::ceil(longest_axis * e / longest);
    return static_cast<uint32_t>(std::max(1.0, n));
  };
  return {axis_dims(ext.x), axis_dims(ext.y), axis_dims(ext.z)};
}

Aabb padded_grid_bounds(const Aabb& mesh_bounds) {
  const Vec3 ext = mesh_bounds.extents();
  const double longest = std::max({ext.x, ext.y, ext.z});
  if (longest <= 0) throw ValidationError("mesh has no spatial extent");
  auto pad = [&](double e) { return 0.005 * (e > 0 ? e : longest); };
  Aabb out = mesh_bounds;
  out.min = out.min - Vec3{pad(ext.x), pad(ext.y), pad(ext.z)};
  out.max = out.max + Vec3{pad(ext.x), pad(ext.y), pad(ext.z)};
  return out;
}

VoxelGrid voxelize(const TriangleMesh& mesh, const Bvh& bvh, GridDims dims) {
  validate_mesh(mesh);
  VoxelGrid grid(padded_grid_bounds(mesh_bounds(mesh)), dims);

  const int64_t total = static_cast<int64_t>(dims.volume());
#pragma omp parallel for schedule(dynamic, 256)
  for (int64_t n = 0; n < total; ++n) {
    const VoxelIndex v = grid.from_linear(static_cast<uint64_t>(n));
    const Aabb box = grid.voxel_bounds(v);
    const bool hit = bvh.visit_box(box, [&](uint32_t tri) {
      return triangle_aabb_overlap(mesh.triangle(tri), box);
    });
    grid.active_[n] = hit ? 1 : 0;
  }

  uint64_t count = 0;
  for (uint8_t a : grid.active_) count += a;
  grid.active_count_ = count;
  return grid;
}

namespace {

// Amanatides-Woo stepping state. Ties between axes resolve x, then y, then z,
// and only one axis advances per step, so replays are order-stable.
struct DdaWalk {
  VoxelIndex cell;
  int32_t step[3];
  double t_max[3];
  double t_delta[3];
  GridDims dims;
  bool alive = false;

  bool init(const VoxelGrid& grid, const Ray& ray) {
    const auto span = ray_aabb(ray, grid.bounds());
    if (!span) return false;
    const double t0 = std::max(span->first, 0.0);
    if (span->second < t0) return false;

    dims = grid.dims();
    const Point3 entry = ray.at(t0);
    const auto start = grid.locate(entry);
    VoxelIndex c;
    if (start) {
      c = *start;
    } else {
      // Entry point rounded just outside the bounds; clamp per axis.
      auto clamp_axis = [&](double p, double lo, double size, uint32_t n) {
        const double f = std::floor((p - lo) / size);
        return static_cast<uint32_t>(
            std::clamp(static_cast<long long>(f), 0ll, static_cast<long long>(n) - 1));
      };
      c = {clamp_axis(entry.x, grid.bounds().min.x, grid.voxel_size().x, dims.nx),
           clamp_axis(entry.y, grid.bounds().min.y, grid.voxel_size().y, dims.ny),
           clamp_axis(entry.z, grid.bounds().min.z, grid.voxel_size().z, dims.nz)};
    }
    cell = c;

    const uint32_t idx[3] = {c.i, c.j, c.k};
    for (int axis = 0; axis < 3; ++axis) {
      const double d = ray.direction[axis];
      const double lo = grid.bounds().min[axis];
      const double size = grid.voxel_size()[axis];
      if (d > 0) {
        step[axis] = 1;
        t_max[axis] = (lo + (idx[axis] + 1) * size - ray.origin[axis]) / d;
        t_delta[axis] = size / d;
      } else if (d < 0) {
        step[axis] = -1;
        t_max[axis] = (lo + idx[axis] * size - ray.origin[axis]) / d;
        t_delta[axis] = -size / d;
      } else {
        step[axis] = 0;
        t_max[axis] = std::numeric_limits<double>::infinity();
        t_delta[axis] = std::numeric_limits<double>::infinity();
      }
    }
    alive = true;
    return true;
  }

  // Advance one cell; false once the walk leaves the grid.
  bool advance() {
    const int axis = (t_max[0] <= t_max[1] && t_max[0] <= t_max[2]) ? 0
                     : (t_max[1] <= t_max[2])                       ? 1
                                                                    : 2;
    uint32_t* idx = axis == 0 ? &cell.i : axis == 1 ? &cell.j : &cell.k;
    const uint32_t n = axis == 0 ? dims.nx : axis == 1 ? dims.ny : dims.nz;
    if (step[axis] > 0) {
      if (*idx + 1 >= n) return alive = false;
      ++*idx;
    } else if (step[axis] < 0) {
      if (*idx == 0) return alive = false;
      --*idx;
    } else {
      return alive = false;  // no finite axis left to advance
    }
    t_max[axis] += t_delta[axis];
    return true;
  }
};

}  // namespace

std::vector<VoxelIndex> traverse_ray(const VoxelGrid& grid, const Ray& ray) {
  std::vector<VoxelIndex> out;
  DdaWalk walk;
  if (!walk.init(grid, ray)) return out;
  do {
    out.push_back(walk.cell);
  } while (walk.advance());
  return out;
}

std::optional<VoxelIndex> nearest_active_hit(const VoxelGrid& grid, const Ray& ray) {
  DdaWalk walk;
  if (!walk.init(grid, ray)) return std::nullopt;
  do {
    if (grid.is_active(walk.cell)) return walk.cell;
  } while (walk.advance());
  return std::nullopt;
}

std::vector<VoxelIndex> voxels_in_sphere(const VoxelGrid& grid, Point3 center, double radius) {
  if (radius < 0) throw ValidationError("sphere radius must be >= 0");
  std::vector<VoxelIndex> out;
  if (radius == 0) {
    if (auto v = grid.locate(center)) out.push_back(*v);
    return out;
  }

  // Scan only the index sub-box covering the sphere.
  const GridDims dims = grid.dims();
  const Vec3 size = grid.voxel_size();
  const Point3 lo = grid.bounds().min;
  auto lo_axis = [&](double c, double l, double s, uint32_t n) {
    const double f = std::floor((c - radius - l) / s);
    return static_cast<uint32_t>(std::clamp(static_cast<long long>(f), 0ll, (long long)n - 1));
  };
  auto hi_axis = [&](double c, double l, double s, uint32_t n) {
    const double f = std::floor((c + radius - l) / s);
    return static_cast<uint32_t>(std::clamp(static_cast<long long>(f), 0ll, (long long)n - 1));
  };
  const uint32_t i0 = lo_axis(center.x, lo.x, size.x, dims.nx);
  const uint32_t i1 = hi_axis(center.x, lo.x, size.x, dims.nx);
  const uint32_t j0 = lo_axis(center.y, lo.y, size.y, dims.ny);
  const uint32_t j1 = hi_axis(center.y, lo.y, size.y, dims.ny);
  const uint32_t k0 = lo_axis(center.z, lo.z, size.z, dims.nz);
  const uint32_t k1 = hi_axis(center.z, lo.z, size.z, dims.nz);

  const double r2 = radius * radius;
  for (uint32_t i = i0; i <= i1; ++i) {
    for (uint32_t j = j0; j <= j1; ++j) {
      for (uint32_t k = k0; k <= k1; ++k) {
        const VoxelIndex v{i, j, k};
        if (length2(grid.voxel_center(v) - center) <= r2) out.push_back(v);
      }
    }
  }
  return out;
}

void write_grid_text(std::ostream& out, const VoxelGrid& grid) {
  out << "heed-grid v1\n";
  out << "dims " << grid.dims().nx << ' ' << grid.dims().ny << ' ' << grid.dims().nz << '\n';
  out << "bounds " << fmt_g17(grid.bounds().min.x) << ' ' << fmt_g17(grid.bounds().min.y) << ' '
      << fmt_g17(grid.bounds().min.z) << ' ' << fmt_g17(grid.bounds().max.x) << ' '
      << fmt_g17(grid.bounds().max.y) << ' ' << fmt_g17(grid.bounds().max.z) << '\n';
  out << "active " << grid.active_count() << '\n';
  for (const VoxelIndex& v : grid.active_indices()) {
    out << v.i << ' ' << v.j << ' ' << v.k << '\n';
  }
}

}  // namespace heed
