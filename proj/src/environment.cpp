#include <cmath>

#include "heed/session.hpp"
#include "heed/util.hpp"

namespace heed {

namespace {

// Hash-lattice value noise, fully spelled out so meshes are seed-stable.
double lattice_value(uint64_t seed, int64_t ix, int64_t iy, uint32_t octave) {
  uint64_t h = seed;
  h ^= 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(ix + 0x10000);
  splitmix64(h);
  h ^= 0xc2b2ae3d27d4eb4full * static_cast<uint64_t>(iy + 0x10000);
  splitmix64(h);
  h ^= 0x165667b19e3779f9ull * (octave + 1);
  const uint64_t v = splitmix64(h);
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(uint64_t seed, double x, double y, uint32_t octave) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int64_t ix = static_cast<int64_t>(fx);
  const int64_t iy = static_cast<int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice_value(seed, ix, iy, octave);
  const double v10 = lattice_value(seed, ix + 1, iy, octave);
  const double v01 = lattice_value(seed, ix, iy + 1, octave);
  const double v11 = lattice_value(seed, ix + 1, iy + 1, octave);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

double fractal_height(uint64_t seed, double u, double v) {
  // u, v in [0, 1]; 4 octaves, persistence 0.5.
  double height = 0;
  double amplitude = 1.0;
  double frequency = 2.0;
  double norm = 0;
  for (uint32_t octave = 0; octave < 4; ++octave) {
    height += amplitude * value_noise(seed, u * frequency, v * frequency, octave);
    norm += amplitude;
    amplitude *= 0.5;
    frequency *= 2.0;
  }
  return height / norm;
}

TriangleMesh make_terrain(const EnvironmentSpec& spec, uint64_t seed) {
  const uint32_t n = spec.terrain_n;
  if (n < 2) throw ValidationError("terrain_n must be >= 2");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(n) * n);
  const double half = spec.terrain_extent / 2.0;
  for (uint32_t row = 0; row < n; ++row) {
    for (uint32_t col = 0; col < n; ++col) {
      const double u = static_cast<double>(col) / (n - 1);
      const double v = static_cast<double>(row) / (n - 1);
      const double x = -half + u * spec.terrain_extent;
      const double y = -half + v * spec.terrain_extent;
      const double z = spec.terrain_amplitude * fractal_height(seed, u, v);
      mesh.vertices.push_back({x, y, z});
    }
  }
  auto vid = [n](uint32_t row, uint32_t col) { return row * n + col; };
  for (uint32_t row = 0; row + 1 < n; ++row) {
    for (uint32_t col = 0; col + 1 < n; ++col) {
      mesh.triangles.push_back({vid(row, col), vid(row, col + 1), vid(row + 1, col)});
      mesh.triangles.push_back({vid(row, col + 1), vid(row + 1, col + 1), vid(row + 1, col)});
    }
  }
  return mesh;
}

// Unit icosahedron vertex/face tables.
struct Icosahedron {
  std::array<Point3, 12> vertices;
  std::array<std::array<uint32_t, 3>, 20> faces;
};

const Icosahedron& icosahedron() {
  static const Icosahedron ico = [] {
    Icosahedron out;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double scale = 1.0 / std::sqrt(1.0 + phi * phi);  // unit radius
    const double a = scale;
    const double b = phi * scale;
    out.vertices = {{{-a, b, 0}, {a, b, 0}, {-a, -b, 0}, {a, -b, 0},
                     {0, -a, b}, {0, a, b}, {0, -a, -b}, {0, a, -b},
                     {b, 0, -a}, {b, 0, a}, {-b, 0, -a}, {-b, 0, a}}};
    out.faces = {{{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10},  {0, 10, 11},
                  {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6},  {7, 1, 8},
                  {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},   {3, 8, 9},
                  {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},   {9, 8, 1}}};
    return out;
  }();
  return ico;
}

TriangleMesh make_scatterplot(const EnvironmentSpec& spec, uint64_t seed) {
  if (spec.scatter_points == 0) throw ValidationError("scatter_points must be >= 1");
  if (spec.glyph_radius <= 0) throw ValidationError("glyph_radius must be > 0");
  Rng rng(seed);
  const double half = spec.scatter_extent / 2.0;
  const double margin = spec.glyph_radius;
  if (half <= margin) throw ValidationError("glyph_radius too large for scatter extent");

  const Icosahedron& ico = icosahedron();
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<size_t>(spec.scatter_points) * ico.vertices.size());
  mesh.triangles.reserve(static_cast<size_t>(spec.scatter_points) * ico.faces.size());
  for (uint32_t g = 0; g < spec.scatter_points; ++g) {
    const Point3 center{rng.uniform(-half + margin, half - margin),
                        rng.uniform(-half + margin, half - margin),
                        rng.uniform(-half + margin, half - margin)};
    const uint32_t base = static_cast<uint32_t>(mesh.vertices.size());
    for (const Point3& v : ico.vertices) mesh.vertices.push_back(center + v * spec.glyph_radius);
    for (const auto& f : ico.faces) {
      mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
    }
  }
  return mesh;
}

}  // namespace

TriangleMesh generate_environment(const EnvironmentSpec& spec, uint64_t seed) {
  return spec.kind == EnvironmentKind::kTerrain ? make_terrain(spec, seed)
                                                : make_scatterplot(spec, seed);
}

std::vector<Target> place_targets(const VoxelGrid& grid, double fraction, uint64_t seed,
                                  const TriangleMesh& mesh) {
  if (fraction <= 0 || fraction > 1) throw ValidationError("target_fraction must be in (0, 1]");
  std::vector<VoxelIndex> active = grid.active_indices();
  const uint64_t count = static_cast<uint64_t>(fraction * static_cast<double>(active.size()));
  if (count == 0) throw ValidationError("target_fraction selects zero targets");

  // Partial Fisher-Yates over the i-major active list.
  Rng rng(seed);
  for (uint64_t n = 0; n < count; ++n) {
    const uint64_t j = n + rng.next_below(active.size() - n);
    std::swap(active[n], active[j]);
  }
  active.resize(count);
  std::sort(active.begin(), active.end());

  std::vector<Target> targets;
  targets.reserve(count);
  for (const VoxelIndex& v : active) {
    Target t;
    t.voxel = v;
    t.center = closest_point_on_mesh(grid.voxel_center(v), mesh);
    targets.push_back(t);
  }
  return targets;
}

std::vector<uint32_t> check_discovery(const GazeSample& sample, std::vector<Target>& targets,
                                      const DiscoveryRule& rule) {
  std::vector<uint32_t> found;
  const double cos_cone = std::cos(rule.facing_cone_deg * M_PI / 180.0);
  for (uint32_t index = 0; index < targets.size(); ++index) {
    Target& target = targets[index];
    if (target.discovered_by) continue;
    const Vec3 to_target = target.center - sample.ray.origin;
    const double along = dot(to_target, sample.ray.direction);
    if (along <= 0) continue;  // behind or at the viewer
    const double dist2 = length2(to_target) - along * along;
    if (dist2 > rule.proximity * rule.proximity) continue;
    const double range = length(to_target);
    if (range <= 0 || along / range < cos_cone) continue;
    target.discovered_by = sample.user;
    target.discovery_time = sample.time;
    found.push_back(index);
  }
  return found;
}

}  // namespace heed
