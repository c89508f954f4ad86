#include "volbench/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace volbench {

KdTree3::KdTree3(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) return;
  std::vector<std::uint32_t> order(points_.size());
  std::iota(order.begin(), order.end(), 0u);
  nodes_.reserve(points_.size());
  root_ = build(order.data(), order.data() + order.size());
}

std::uint32_t KdTree3::build(std::uint32_t* first, std::uint32_t* last) {
  if (first == last) return kNone;

  Vec3 lo = points_[*first];
  Vec3 hi = lo;
  for (std::uint32_t* it = first; it != last; ++it) {
    lo = lo.cwiseMin(points_[*it]);
    hi = hi.cwiseMax(points_[*it]);
  }
  const Vec3 extent = hi - lo;
  std::uint8_t axis = 0;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;

  std::uint32_t* mid = first + (last - first) / 2;
  std::nth_element(first, mid, last, [&](std::uint32_t a, std::uint32_t b) {
    return points_[a][axis] < points_[b][axis];
  });

  const std::uint32_t id = std::uint32_t(nodes_.size());
  nodes_.push_back(Node{*mid, kNone, kNone, axis});
  const std::uint32_t left = build(first, mid);
  const std::uint32_t right = build(mid + 1, last);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

KdTree3::Hit KdTree3::nearest(const Vec3& query) const {
  if (points_.empty()) throw std::logic_error("KdTree3::nearest on empty tree");
  Hit best;
  best.index = nodes_[root_].point;
  best.dist2 = squared_distance(query, points_[best.index]);
  search(root_, query, best);
  return best;
}

void KdTree3::search(std::uint32_t node, const Vec3& query, Hit& best) const {
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];

  const double d2 = squared_distance(query, p);
  if (d2 < best.dist2) {
    best.dist2 = d2;
    best.index = n.point;
  }

  const double diff = query[n.axis] - p[n.axis];
  const std::uint32_t near = diff < 0.0 ? n.left : n.right;
  const std::uint32_t far = diff < 0.0 ? n.right : n.left;
  if (near != kNone) search(near, query, best);
  // A far-side point can only beat `best` if the splitting plane is
  // strictly closer than the current best distance.
  if (far != kNone && diff * diff < best.dist2) search(far, query, best);
}

}  // namespace volbench
