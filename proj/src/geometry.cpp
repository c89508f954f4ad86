#include "volbench/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "volbench/kdtree.hpp"
#include "volbench/rng.hpp"

namespace volbench {
namespace {

constexpr double kDegenerateScale = 1e-12;

// Least-squares rigid transform mapping src[i] onto dst[i] via the
// cross-covariance SVD (Kabsch), with the usual reflection fix.
RigidTransform solve_rigid(const std::vector<Vec3>& src,
                           const std::vector<Vec3>& dst) {
  Vec3 src_mean = Vec3::Zero();
  Vec3 dst_mean = Vec3::Zero();
  for (const Vec3& p : src) src_mean += p;
  for (const Vec3& q : dst) dst_mean += q;
  src_mean /= double(src.size());
  dst_mean /= double(dst.size());

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    cov += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 rotation = svd.matrixV() * svd.matrixU().transpose();
  if (rotation.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    rotation = svd.matrixV() * flip * svd.matrixU().transpose();
  }

  RigidTransform t;
  t.rotation = rotation;
  t.translation = dst_mean - rotation * src_mean;
  return t;
}

// apply `outer` after `inner`: x -> outer(inner(x)).
RigidTransform compose(const RigidTransform& outer,
                       const RigidTransform& inner) {
  RigidTransform t;
  t.rotation = outer.rotation * inner.rotation;
  t.translation = outer.rotation * inner.translation + outer.translation;
  return t;
}

double rmse_against(const std::vector<Vec3>& pts, const KdTree3& target,
                    double max_distance, std::size_t* inliers) {
  const double max_d2 = max_distance * max_distance;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Vec3& p : pts) {
    const KdTree3::Hit hit = target.nearest(p);
    if (hit.dist2 <= max_d2) {
      sum += hit.dist2;
      ++count;
    }
  }
  if (inliers) *inliers = count;
  return count == 0 ? 0.0 : std::sqrt(sum / double(count));
}

}  // namespace

PointCloud normalize_unit_cube(const PointCloud& cloud) {
  if (cloud.empty())
    throw std::invalid_argument("normalize_unit_cube: empty cloud");

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : cloud.points) centroid += p;
  centroid /= double(cloud.size());

  double scale = 0.0;
  for (const Vec3& p : cloud.points)
    scale = std::max(scale, (p - centroid).cwiseAbs().maxCoeff());
  if (scale < kDegenerateScale) scale = 1.0;

  PointCloud out;
  out.frame = Frame::normalized;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back((p - centroid) / scale);
  return out;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points)
    out.points.push_back(t.rotation * p + t.translation);
  return out;
}

double inlier_rmse(const PointCloud& source, const PointCloud& target,
                   double max_distance, std::size_t* inliers) {
  if (source.empty() || target.empty())
    throw std::invalid_argument("inlier_rmse: empty cloud");
  KdTree3 tree(target.points);
  return rmse_against(source.points, tree, max_distance, inliers);
}

RigidTransform icp_align(const PointCloud& source, const PointCloud& target,
                         const IcpParams& params) {
  if (source.size() < 3 || target.size() < 3)
    throw std::invalid_argument("icp_align: clouds need at least 3 points");
  if (source.frame != Frame::normalized || target.frame != Frame::normalized)
    throw std::invalid_argument("icp_align: clouds must be normalized");
  if (params.max_correspondence_distance <= 0.0)
    throw std::invalid_argument("icp_align: correspondence distance must be > 0");

  const KdTree3 tree(target.points);
  const double max_d2 =
      params.max_correspondence_distance * params.max_correspondence_distance;

  const double identity_rmse = rmse_against(
      source.points, tree, params.max_correspondence_distance, nullptr);

  RigidTransform total;
  std::vector<Vec3> current = source.points;
  std::vector<Vec3> pair_src, pair_dst;
  double prev_rmse = identity_rmse;
  double final_rmse = identity_rmse;
  bool solved_any = false;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    pair_src.clear();
    pair_dst.clear();
    for (const Vec3& p : current) {
      const KdTree3::Hit hit = tree.nearest(p);
      if (hit.dist2 <= max_d2) {
        pair_src.push_back(p);
        pair_dst.push_back(target.points[hit.index]);
      }
    }
    if (pair_src.size() < 3) break;

    total = compose(solve_rigid(pair_src, pair_dst), total);
    solved_any = true;

    for (std::size_t i = 0; i < current.size(); ++i)
      current[i] = total.rotation * source.points[i] + total.translation;

    final_rmse = rmse_against(current, tree,
                              params.max_correspondence_distance, nullptr);
    if (prev_rmse - final_rmse < params.rmse_convergence_tol) break;
    prev_rmse = final_rmse;
  }

  if (!solved_any || final_rmse > identity_rmse) return RigidTransform::identity();
  return total;
}

PointCloud subsample(const PointCloud& cloud, std::size_t n,
                     std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("subsample: n must be >= 1");
  if (cloud.size() <= n) return cloud;

  std::vector<std::uint32_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(seed);

  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + bounded_uint64(rng, cloud.size() - i);
    std::swap(order[i], order[j]);
    out.points.push_back(cloud.points[order[i]]);
  }
  return out;
}

}  // namespace volbench
