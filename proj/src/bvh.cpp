#include "heed/bvh.hpp"

#include <algorithm>
#include <numeric>

#include "heed/util.hpp"

namespace heed {

namespace {

constexpr uint32_t kMaxLeafSize = 4;

struct Builder {
  const TriangleMesh& mesh;
  std::vector<Aabb> tri_bounds;
  std::vector<Point3> centroids;
  std::vector<uint32_t> order;
  std::vector<Bvh::Node> nodes;

  explicit Builder(const TriangleMesh& m) : mesh(m) {
    const size_t n = mesh.triangle_count();
    tri_bounds.reserve(n);
    centroids.reserve(n);
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    for (size_t t = 0; t < n; ++t) {
      const Aabb b = triangle_bounds(mesh.triangle(t));
      tri_bounds.push_back(b);
      centroids.push_back(b.center());
    }
    nodes.reserve(2 * n);
  }

  Aabb range_bounds(uint32_t first, uint32_t count) const {
    Aabb b = Aabb::empty();
    for (uint32_t i = first; i < first + count; ++i) b.expand(tri_bounds[order[i]]);
    return b;
  }

  int32_t build(uint32_t first, uint32_t count) {
    const int32_t node_index = static_cast<int32_t>(nodes.size());
    nodes.push_back({});
    nodes[node_index].bounds = range_bounds(first, count);
    if (count <= kMaxLeafSize) {
      nodes[node_index].first = first;
      nodes[node_index].count = count;
      return node_index;
    }

    // Longest axis of the node bounds; median split on triangle centroids.
    const Vec3 ext = nodes[node_index].bounds.extents();
    const int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
    const uint32_t mid = first + count / 2;
    std::nth_element(order.begin() + first, order.begin() + mid, order.begin() + first + count,
                     [&](uint32_t a, uint32_t b) {
                       if (centroids[a][axis] != centroids[b][axis]) {
                         return centroids[a][axis] < centroids[b][axis];
                       }
                       return a < b;  // deterministic for equal centroids
                     });

    const int32_t left = build(first, mid - first);
    const int32_t right = build(mid, first + count - mid);
    nodes[node_index].left = left;
    nodes[node_index].right = right;
    return node_index;
  }
};

}  // namespace

Bvh build_bvh(const TriangleMesh& mesh) {
  validate_mesh(mesh);
  Builder builder(mesh);
  builder.build(0, static_cast<uint32_t>(mesh.triangle_count()));
  Bvh bvh;
  bvh.nodes_ = std::move(builder.nodes);
  bvh.order_ = std::move(builder.order);
  return bvh;
}

std::optional<RayHit> Bvh::intersect(const TriangleMesh& mesh, const Ray& ray) const {
  if (nodes_.empty()) return std::nullopt;
  std::optional<RayHit> best;
  int32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    const auto span = ray_aabb(ray, node.bounds);
    if (!span || span->second < 0.0) continue;
    if (best && span->first > best->t) continue;
    if (node.is_leaf()) {
      for (uint32_t i = node.first; i < node.first + node.count; ++i) {
        const uint32_t tri = order_[i];
        const auto t = ray_triangle(ray, mesh.triangle(tri));
        if (!t) continue;
        if (!best || *t < best->t || (*t == best->t && tri < best->triangle)) {
          best = RayHit{*t, tri};
        }
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

std::optional<RayHit> intersect_ray_mesh(const Bvh& bvh, const TriangleMesh& mesh,
                                         const Ray& ray) {
  return bvh.intersect(mesh, ray);
}

}  // namespace heed
