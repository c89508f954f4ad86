#pragma once
#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace volbench {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Coordinate frame a cloud lives in. Metric code refuses to mix frames.
enum class Frame { physical, normalized };

// Ordered list of 3D points. Order is part of the contract: subsampling,
// EMD seeding and the serialized outputs all depend on it.
struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::physical;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace volbench
