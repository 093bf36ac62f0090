#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "heed/geometry.hpp"

namespace heed {

/// Binary bounding volume hierarchy over mesh triangles. Median split on the
/// longest axis, at most 4 triangles per leaf. Immutable after construction;
/// queries are safe to run concurrently.
class Bvh {
 public:
  struct Node {
    Aabb bounds;
    int32_t left = -1;    // internal: child node indices
    int32_t right = -1;
    uint32_t first = 0;   // leaf: range into triangle order
    uint32_t count = 0;   // leaf iff count > 0
    bool is_leaf() const { return count > 0; }
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<uint32_t>& triangle_order() const { return order_; }

  /// Nearest triangle hit along the ray. Ties on t go to the smaller
  /// triangle id, matching an exhaustive first-wins scan.
  std::optional<RayHit> intersect(const TriangleMesh& mesh, const Ray& ray) const;

  /// Visit every triangle whose subtree bounds overlap the box. The callback
  /// receives a triangle id and returns true to stop early.
  template <typename Visitor>
  bool visit_box(const Aabb& box, Visitor&& visit) const {
    if (nodes_.empty()) return false;
    int32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!node.bounds.overlaps(box)) continue;
      if (node.is_leaf()) {
        for (uint32_t i = node.first; i < node.first + node.count; ++i) {
          if (visit(order_[i])) return true;
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return false;
  }

  friend Bvh build_bvh(const TriangleMesh& mesh);

 private:
  std::vector<Node> nodes_;
  std::vector<uint32_t> order_;
};

/// Builds the hierarchy. Throws ValidationError for an empty or invalid mesh.
Bvh build_bvh(const TriangleMesh& mesh);

/// Nearest ray hit through the hierarchy, or nothing.
std::optional<RayHit> intersect_ray_mesh(const Bvh& bvh, const TriangleMesh& mesh, const Ray& ray);

}  // namespace heed
