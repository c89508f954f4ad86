#pragma once
#include "volbench/point_cloud.hpp"

#include <cstdint>

namespace volbench {

// Rotation + translation mapping one cloud's frame onto another's.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  bool is_identity() const {
    return rotation == Mat3::Identity() && translation == Vec3::Zero();
  }
};

struct IcpParams {
  double max_correspondence_distance = 0.02;
  int max_iterations = 50;
  double rmse_convergence_tol = 1e-6;
};

// Center at the centroid and divide by the maximum absolute centered
// coordinate, so the result lies in [-1, 1]^3. Coincident clouds map to
// all zeros instead of dividing by ~0.
PointCloud normalize_unit_cube(const PointCloud& cloud);

// p -> R p + t for every point, order preserved.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

// RMS distance over pairs (source point, nearest target point) whose
// distance is <= max_distance; 0 when no pair qualifies. The pair count
// goes to *inliers when given.
double inlier_rmse(const PointCloud& source, const PointCloud& target,
                   double max_distance, std::size_t* inliers = nullptr);

// Point-to-point ICP of source onto target (both unit-cube normalized).
// Alternates thresholded nearest-neighbor correspondences with the SVD
// rigid least-squares solve, and falls back to the identity whenever that
// would score a lower inlier RMSE, so
//   inlier_rmse(apply_transform(source, result)) <= inlier_rmse(source)
// always holds.
RigidTransform icp_align(const PointCloud& source, const PointCloud& target,
                         const IcpParams& params = {});

// At most n points drawn uniformly without replacement by a partial
// Fisher-Yates shuffle over std::mt19937_64(seed); clouds of size <= n
// pass through unchanged. Same (cloud, n, seed) gives the same output in
// the same order on every platform.
PointCloud subsample(const PointCloud& cloud, std::size_t n,
                     std::uint64_t seed);

}  // namespace volbench
