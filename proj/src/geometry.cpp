#include "heed/geometry.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "heed/util.hpp"

namespace heed {

void validate_mesh(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) throw ValidationError("mesh has no triangles");
  for (const auto& tri : mesh.triangles) {
    for (uint32_t idx : tri) {
      if (idx >= mesh.vertices.size()) throw ValidationError("triangle index out of range");
    }
  }
  for (const auto& v : mesh.vertices) {
    if (!v.finite()) throw ValidationError("non-finite vertex");
  }
}

Aabb triangle_bounds(const std::array<Point3, 3>& tri) {
  Aabb b{tri[0], tri[0]};
  b.expand(tri[1]);
  b.expand(tri[2]);
  return b;
}

Aabb mesh_bounds(const TriangleMesh& mesh) {
  Aabb b = Aabb::empty();
  for (const auto& v : mesh.vertices) b.expand(v);
  return b;
}

std::optional<double> ray_triangle(const Ray& ray, const std::array<Point3, 3>& tri) {
  const Vec3 e1 = tri[1] - tri[0];
  const Vec3 e2 = tri[2] - tri[0];
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;  // parallel or degenerate
  const double inv_det = 1.0 / det;
  const Vec3 tv = ray.origin - tri[0];
  const double u = dot(tv, p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(tv, e1);
  const double v = dot(ray.direction, q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv_det;
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<std::pair<double, double>> ray_aabb(const Ray& ray, const Aabb& box) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double o = ray.origin[axis];
    const double d = ray.direction[axis];
    const double lo = box.min[axis];
    const double hi = box.max[axis];
    if (d == 0.0) {
      if (o < lo || o > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - o) / d;
    double tb = (hi - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

namespace {

// Akenine-Moller style axis test helpers operating on box-centered vertices.
inline bool axis_separates(Vec3 axis, Vec3 v0, Vec3 v1, Vec3 v2, Vec3 half) {
  const double p0 = dot(axis, v0);
  const double p1 = dot(axis, v1);
  const double p2 = dot(axis, v2);
  const double lo = std::min({p0, p1, p2});
  const double hi = std::max({p0, p1, p2});
  const double rad =
      half.x * std::abs(axis.x) + half.y * std::abs(axis.y) + half.z * std::abs(axis.z);
  return lo > rad || hi < -rad;
}

}  // namespace

bool triangle_aabb_overlap(const std::array<Point3, 3>& tri, const Aabb& box) {
  const Point3 c = box.center();
  const Vec3 half = box.extents() * 0.5;
  const Vec3 v0 = tri[0] - c;
  const Vec3 v1 = tri[1] - c;
  const Vec3 v2 = tri[2] - c;

  // Box face axes: triangle AABB vs box.
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::min({v0[axis], v1[axis], v2[axis]});
    const double hi = std::max({v0[axis], v1[axis], v2[axis]});
    if (lo > half[axis] || hi < -half[axis]) return false;
  }

  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;

  // 9 cross-product axes. A zero axis (degenerate edge pair) projects
  // everything to zero and never separates, which is the behavior we want.
  const Vec3 axes[9] = {
      {0, -e0.z, e0.y}, {0, -e1.z, e1.y}, {0, -e2.z, e2.y},
      {e0.z, 0, -e0.x}, {e1.z, 0, -e1.x}, {e2.z, 0, -e2.x},
      {-e0.y, e0.x, 0}, {-e1.y, e1.x, 0}, {-e2.y, e2.x, 0},
  };
  for (const Vec3& axis : axes) {
    if (axis_separates(axis, v0, v1, v2, half)) return false;
  }

  // Triangle plane vs box. Zero normal (degenerate triangle) never separates.
  const Vec3 n = cross(e0, e1);
  return !axis_separates(n, v0, v1, v2, half);
}

Point3 closest_point_on_triangle(Point3 p, const std::array<Point3, 3>& tri) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Point3 a = tri[0], b = tri[1], c = tri[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double denom = d1 - d3;
    const double v = denom != 0.0 ? d1 / denom : 0.0;
    return a + ab * v;
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double denom = d2 - d6;
    const double w = denom != 0.0 ? d2 / denom : 0.0;
    return a + ac * w;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double denom = (d4 - d3) + (d5 - d6);
    const double w = denom != 0.0 ? (d4 - d3) / denom : 0.0;
    return b + (c - b) * w;
  }

  const double denom = va + vb + vc;
  if (denom == 0.0) return a;  // fully degenerate triangle
  const double v = vb / denom;
  const double w = vc / denom;
  return a + ab * v + ac * w;
}

Point3 closest_point_on_mesh(Point3 p, const TriangleMesh& mesh) {
  validate_mesh(mesh);
  Point3 best = p;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Point3 q = closest_point_on_triangle(p, mesh.triangle(t));
    const double d2 = length2(q - p);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

TriangleMesh load_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Point3 v;
      if (!(ls >> v.x >> v.y >> v.z)) {
        throw ValidationError("obj line " + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<uint32_t, 3> tri{};
      std::string tok;
      int n = 0;
      while (ls >> tok) {
        // Strip /texture/normal attributes.
        const size_t slash = tok.find('/');
        if (slash != std::string::npos) tok.resize(slash);
        long idx = std::strtol(tok.c_str(), nullptr, 10);
        if (idx < 0) idx = static_cast<long>(mesh.vertices.size()) + idx + 1;
        if (idx <= 0 || static_cast<size_t>(idx) > mesh.vertices.size()) {
          throw ValidationError("obj line " + std::to_string(line_no) + ": face index out of range");
        }
        if (n >= 3) {
          throw ValidationError("obj line " + std::to_string(line_no) +
                                ": face is not a triangle");
        }
        tri[n++] = static_cast<uint32_t>(idx - 1);
      }
      if (n != 3) {
        throw ValidationError("obj line " + std::to_string(line_no) + ": face is not a triangle");
      }
      mesh.triangles.push_back(tri);
    }
    // Other record types (vn, vt, o, g, usemtl, #, ...) are ignored.
  }
  validate_mesh(mesh);
  return mesh;
}

TriangleMesh load_obj_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mesh file: " + path);
  return load_obj(in);
}

}  // namespace heed
