#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace heed {

// All geometry is in meters, right-handed, z up.

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend bool operator==(Vec3 a, Vec3 b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

  double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

using Point3 = Vec3;

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length2(Vec3 a) { return dot(a, a); }
inline double length(Vec3 a) { return std::sqrt(length2(a)); }
inline Vec3 normalized(Vec3 a) {
  double len = length(a);
  return len > 0 ? a * (1.0 / len) : a;
}

struct Aabb {
  Point3 min;
  Point3 max;

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
  Point3 center() const { return (min + max) * 0.5; }
  Vec3 extents() const { return max - min; }

  bool contains(Point3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  bool overlaps(const Aabb& b) const {
    return min.x <= b.max.x && max.x >= b.min.x && min.y <= b.max.y && max.y >= b.min.y &&
           min.z <= b.max.z && max.z >= b.min.z;
  }
  void expand(Point3 p) {
    min.x = std::min(min.x, p.x); min.y = std::min(min.y, p.y); min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x); max.y = std::max(max.y, p.y); max.z = std::max(max.z, p.z);
  }
  void expand(const Aabb& b) { expand(b.min); expand(b.max); }

  static Aabb empty() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {{inf, inf, inf}, {-inf, -inf, -inf}};
  }
};

/// Origin plus unit direction (|direction| = 1 within 1e-9).
struct Ray {
  Point3 origin;
  Vec3 direction;

  Point3 at(double t) const { return origin + direction * t; }
  bool unit_direction() const { return std::abs(length(direction) - 1.0) <= 1e-9; }
};

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;

  size_t triangle_count() const { return triangles.size(); }
  std::array<Point3, 3> triangle(size_t t) const {
    const auto& tri = triangles[t];
    return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
  }
};

/// Throws ValidationError if the mesh is empty or has out-of-range indices.
void validate_mesh(const TriangleMesh& mesh);

Aabb triangle_bounds(const std::array<Point3, 3>& tri);
Aabb mesh_bounds(const TriangleMesh& mesh);

struct RayHit {
  double t = 0;
  uint32_t triangle = 0;
};

/// Moller-Trumbore. Returns the smallest t >= 0 or nothing. Degenerate
/// (zero-area) triangles never report hits.
std::optional<double> ray_triangle(const Ray& ray, const std::array<Point3, 3>& tri);

/// Slab test against the infinite line; returns entry/exit parameters
/// (unclamped, may be negative) or nothing when the line misses the box.
std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const Aabb& box);

/// Separating-axis triangle/box overlap: 3 box axes, the triangle normal and
/// 9 edge cross axes. Touching counts as overlap. Degenerate triangles are
/// handled as segments or points.
bool triangle_aabb_overlap(const std::array<Point3, 3>& tri, const Aabb& box);

Point3 closest_point_on_triangle(Point3 p, const std::array<Point3, 3>& tri);

/// Nearest point on any triangle of the mesh (exhaustive scan).
Point3 closest_point_on_mesh(Point3 p, const TriangleMesh& mesh);

/// Reads the v/f subset of ASCII OBJ (triangulated faces, 1-based indices,
/// "f a/b/c" attribute suffixes ignored). Throws ValidationError on bad input.
TriangleMesh load_obj(std::istream& in);
TriangleMesh load_obj_file(const std::string& path);

}  // namespace heed
