#pragma once
#include "volbench/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace volbench {

// Squared Euclidean distance, spelled out term by term. Both the kd-tree
// and the brute-force reference compute distances through this exact
// expression shape, so their results compare bit-equal.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Static 3-d tree with median splits (split axis = widest extent of the
// node's span). Immutable after construction; concurrent queries are safe.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& points);

  struct Hit {
    std::uint32_t index = 0;
    double dist2 = 0.0;
  };

  // Exact nearest neighbor. Requires a non-empty tree.
  Hit nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  struct Node {
    std::uint32_t point;
    std::uint32_t left = kNone;
    std::uint32_t right = kNone;
    std::uint8_t axis = 0;
  };

  std::uint32_t build(std::uint32_t* first, std::uint32_t* last);
  void search(std::uint32_t node, const Vec3& query, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = kNone;
};

}  // namespace volbench
