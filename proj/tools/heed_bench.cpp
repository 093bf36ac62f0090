// Benchmark: serial reference kernels vs the production (BVH + OpenMP) paths.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "heed/bvh.hpp"
#include "heed/reference.hpp"
#include "heed/session.hpp"
#include "heed/util.hpp"
#include "heed/voxel_grid.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

heed::TriangleMesh bench_mesh(uint32_t glyphs, uint64_t seed) {
  heed::EnvironmentSpec spec;
  spec.kind = heed::EnvironmentKind::kScatterplot;
  spec.scatter_points = glyphs;
  spec.glyph_radius = 0.035;
  return heed::generate_environment(spec, seed);
}

heed::Ray random_ray(heed::Rng& rng, const heed::Aabb& bounds) {
  const heed::Point3 target{rng.uniform(bounds.min.x, bounds.max.x),
                            rng.uniform(bounds.min.y, bounds.max.y),
                            rng.uniform(bounds.min.z, bounds.max.z)};
  const heed::Point3 origin{bounds.min.x - 1.0 + rng.uniform(-0.5, 0.5),
                            rng.uniform(bounds.min.y - 1, bounds.max.y + 1),
                            rng.uniform(bounds.min.z - 1, bounds.max.z + 1)};
  return {origin, heed::normalized(target - origin)};
}

void bench_voxelize(uint32_t glyphs, uint32_t resolution, bool with_reference) {
  const heed::TriangleMesh mesh = bench_mesh(glyphs, 7);
  const heed::Aabb bounds = heed::padded_grid_bounds(heed::mesh_bounds(mesh));
  const heed::GridDims dims = heed::VoxelGrid::proportional_dims(bounds, resolution);

  auto t0 = Clock::now();
  const heed::Bvh bvh = heed::build_bvh(mesh);
  const double build_s = seconds_since(t0);

  t0 = Clock::now();
  const heed::VoxelGrid grid = heed::voxelize(mesh, bvh, dims);
  const double fast_s = seconds_since(t0);

  std::printf("voxelize  %7zu tris  %3u^3-ish  bvh build %.3fs  bvh+omp %.3fs  (%llu active)\n",
              mesh.triangle_count(), resolution, build_s, fast_s,
              static_cast<unsigned long long>(grid.active_count()));

  if (with_reference) {
    t0 = Clock::now();
    const heed::VoxelGrid ref = heed::ref::voxelize_exhaustive(mesh, dims);
    const double ref_s = seconds_since(t0);
    const bool same = ref.active_indices() == grid.active_indices();
    std::printf("          serial exhaustive %.3fs  speedup %.1fx  active sets %s\n", ref_s,
                ref_s / fast_s, same ? "identical" : "DIFFER");
  }
}

void bench_rays(uint32_t glyphs, uint32_t rays) {
  const heed::TriangleMesh mesh = bench_mesh(glyphs, 11);
  const heed::Bvh bvh = heed::build_bvh(mesh);
  const heed::Aabb bounds = heed::mesh_bounds(mesh);

  heed::Rng rng(99);
  std::vector<heed::Ray> batch;
  batch.reserve(rays);
  for (uint32_t r = 0; r < rays; ++r) batch.push_back(random_ray(rng, bounds));

  auto t0 = Clock::now();
  uint64_t hits_ref = 0;
  for (const heed::Ray& ray : batch) {
    if (heed::ref::nearest_hit_scan(mesh, ray)) ++hits_ref;
  }
  const double ref_s = seconds_since(t0);

  t0 = Clock::now();
  uint64_t hits_bvh = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits_bvh)
  for (int64_t r = 0; r < static_cast<int64_t>(batch.size()); ++r) {
    if (bvh.intersect(mesh, batch[r])) ++hits_bvh;
  }
  const double fast_s = seconds_since(t0);

  std::printf("rays      %7u rays  serial scan %.3fs  bvh+omp %.3fs  speedup %.1fx  hits %s\n",
              rays, ref_s, fast_s, ref_s / fast_s,
              hits_ref == hits_bvh ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  uint32_t glyphs = 100;
  uint32_t resolution = 64;
  uint32_t rays = 20000;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    auto next = [&]() { return static_cast<uint32_t>(std::atoi(argv[++a])); };
    if (arg == "--glyphs" && a + 1 < argc) glyphs = next();
    else if (arg == "--resolution" && a + 1 < argc) resolution = next();
    else if (arg == "--rays" && a + 1 < argc) rays = next();
    else {
      std::printf("usage: heed_bench [--glyphs N] [--resolution N] [--rays N]\n");
      return 2;
    }
  }

#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled\n");
#endif

  // The exhaustive pass is O(tris * voxels); keep it to a size it can finish.
  bench_voxelize(glyphs, std::min(resolution, 24u), true);
  bench_voxelize(glyphs, resolution, false);
  bench_rays(glyphs, rays);
  return 0;
}
