// Test-only oracles and generators. Everything here is independent of the
// production query paths: straight loops, dense sampling, closed forms.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "heed/geometry.hpp"
#include "heed/util.hpp"
#include "heed/voxel_grid.hpp"

namespace oracle {

inline heed::Point3 random_point(heed::Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline heed::Vec3 random_unit(heed::Rng& rng) {
  // Rejection-sample inside the unit ball; deterministic given the stream.
  while (true) {
    const heed::Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double n2 = heed::length2(v);
    if (n2 > 1e-6 && n2 <= 1.0) return v * (1.0 / std::sqrt(n2));
  }
}

/// Random triangle soup inside [lo, hi]^3 with edge lengths up to max_edge.
inline heed::TriangleMesh random_mesh(heed::Rng& rng, size_t triangles, double lo, double hi,
                                      double max_edge) {
  heed::TriangleMesh mesh;
  for (size_t t = 0; t < triangles; ++t) {
    const heed::Point3 a = random_point(rng, lo, hi);
    const heed::Point3 b = a + random_unit(rng) * rng.uniform(0.05 * max_edge, max_edge);
    const heed::Point3 c = a + random_unit(rng) * rng.uniform(0.05 * max_edge, max_edge);
    const uint32_t base = static_cast<uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(a);
    mesh.vertices.push_back(b);
    mesh.vertices.push_back(c);
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  return mesh;
}

/// Point-sampling positive test: true when some sample of the triangle
/// (barycentric grid, ~n^2/2 points) lies inside the box. Never reports an
/// overlap that does not exist; thin slivers may go unnoticed.
inline bool triangle_in_box_sampled(const std::array<heed::Point3, 3>& tri,
                                    const heed::Aabb& box, int n = 141) {
  for (int iu = 0; iu <= n; ++iu) {
    for (int iv = 0; iv + iu <= n; ++iv) {
      const double u = static_cast<double>(iu) / n;
      const double v = static_cast<double>(iv) / n;
      const heed::Point3 p =
          tri[0] * (1.0 - u - v) + tri[1] * u + tri[2] * v;
      if (box.contains(p)) return true;
    }
  }
  return false;
}

/// Dense sampling along the ray, deduplicating consecutive voxels.
inline std::vector<heed::VoxelIndex> traversal_sampled(const heed::VoxelGrid& grid,
                                                       const heed::Ray& ray) {
  std::vector<heed::VoxelIndex> out;
  const auto span = heed::ray_aabb(ray, grid.bounds());
  if (!span) return out;
  const double t0 = std::max(span->first, 0.0);
  const double t1 = span->second;
  if (t1 < t0) return out;
  const heed::Vec3 vs = grid.voxel_size();
  const double step = std::min({vs.x, vs.y, vs.z}) / 100.0;
  for (double t = t0; t <= t1; t += step) {
    const auto v = grid.locate(ray.at(t));
    if (!v) continue;
    if (out.empty() || !(out.back() == *v)) out.push_back(*v);
  }
  return out;
}

/// a is a subsequence of b.
inline bool is_subsequence(const std::vector<heed::VoxelIndex>& a,
                           const std::vector<heed::VoxelIndex>& b) {
  size_t bi = 0;
  for (const heed::VoxelIndex& v : a) {
    while (bi < b.size() && !(b[bi] == v)) ++bi;
    if (bi == b.size()) return false;
    ++bi;
  }
  return true;
}

/// Closed-form normalized redundancy from counts.
inline double redundancy_closed_form(const std::vector<uint64_t>& counts) {
  double total = 0;
  size_t distinct = 0;
  for (uint64_t c : counts) {
    total += static_cast<double>(c);
    if (c) ++distinct;
  }
  if (distinct <= 1) return 1.0;
  double h = 0;
  for (uint64_t c : counts) {
    if (!c) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return 1.0 - h / std::log(static_cast<double>(distinct));
}

}  // namespace oracle
