#include "volbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "volbench/kdtree.hpp"
#include "volbench/rng.hpp"

namespace volbench {
namespace {

void require_nonempty(const PointCloud& a, const PointCloud& b,
                      const char* op) {
  if (a.empty() || b.empty())
    throw std::invalid_argument(std::string(op) + ": empty cloud");
}

void require_same_frame(const PointCloud& a, const PointCloud& b,
                        const char* op) {
  if (a.frame != b.frame)
    throw std::invalid_argument(std::string(op) + ": clouds in different frames");
}

}  // namespace

F1Result f1_at_tau(const PointCloud& pred, const PointCloud& gt, double tau) {
  require_nonempty(pred, gt, "f1_at_tau");
  require_same_frame(pred, gt, "f1_at_tau");
  if (tau <= 0.0) throw std::invalid_argument("f1_at_tau: tau must be > 0");

  const double tau2 = tau * tau;
  const KdTree3 gt_tree(gt.points);
  const KdTree3 pred_tree(pred.points);

  std::size_t pred_hits = 0;
  for (const Vec3& p : pred.points)
    if (gt_tree.nearest(p).dist2 <= tau2) ++pred_hits;
  std::size_t gt_hits = 0;
  for (const Vec3& q : gt.points)
    if (pred_tree.nearest(q).dist2 <= tau2) ++gt_hits;

  F1Result r;
  r.precision = double(pred_hits) / double(pred.size());
  r.recall = double(gt_hits) / double(gt.size());
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

OccupancyGrid voxelize(const PointCloud& cloud, int grid_size) {
  if (grid_size < 2) throw std::invalid_argument("voxelize: grid_size must be >= 2");
  if (cloud.frame != Frame::normalized)
    throw std::invalid_argument("voxelize: cloud must be normalized");

  const double voxel = 2.0 / double(grid_size);
  OccupancyGrid grid;
  grid.grid_size = grid_size;
  for (const Vec3& p : cloud.points) {
    std::uint64_t key = 0;
    for (int a = 2; a >= 0; --a) {
      long idx = long(std::floor((p[a] + 1.0) / voxel));
      idx = std::clamp(idx, 0l, long(grid_size) - 1);
      key = key * std::uint64_t(grid_size) + std::uint64_t(idx);
    }
    grid.occupied.insert(key);
  }
  return grid;
}

std::pair<double, double> voxel_overlap(const OccupancyGrid& pred,
                                        const OccupancyGrid& gt) {
  if (pred.grid_size != gt.grid_size)
    throw std::invalid_argument("voxel_overlap: grid size mismatch");
  if (pred.occupied.empty() || gt.occupied.empty())
    throw std::invalid_argument("voxel_overlap: empty occupancy set");

  const auto& small = pred.occupied.size() <= gt.occupied.size() ? pred.occupied
                                                                 : gt.occupied;
  const auto& large = pred.occupied.size() <= gt.occupied.size() ? gt.occupied
                                                                 : pred.occupied;
  std::size_t inter = 0;
  for (std::uint64_t key : small) inter += large.count(key);

  const double na = double(pred.occupied.size());
  const double nb = double(gt.occupied.size());
  const double uni = na + nb - double(inter);
  return {double(inter) / uni, 2.0 * double(inter) / (na + nb)};
}

double chamfer(const PointCloud& pred, const PointCloud& gt) {
  require_nonempty(pred, gt, "chamfer");
  require_same_frame(pred, gt, "chamfer");

  const KdTree3 gt_tree(gt.points);
  const KdTree3 pred_tree(pred.points);

  double forward = 0.0;
  for (const Vec3& p : pred.points)
    forward += std::sqrt(gt_tree.nearest(p).dist2);
  double backward = 0.0;
  for (const Vec3& q : gt.points)
    backward += std::sqrt(pred_tree.nearest(q).dist2);

  return forward / double(pred.size()) + backward / double(gt.size());
}

std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  if (n <= 0 || cost.size() != std::size_t(n) * std::size_t(n))
    throw std::invalid_argument("solve_assignment: bad matrix shape");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials/links; p[j] = row assigned to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      const double* row = cost.data() + std::size_t(i0 - 1) * n;
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) match[p[j] - 1] = j - 1;
  return match;
}

double emd(const PointCloud& pred, const PointCloud& gt, int cap,
           std::uint64_t seed) {
  require_nonempty(pred, gt, "emd");
  require_same_frame(pred, gt, "emd");
  if (cap < 1) throw std::invalid_argument("emd: cap must be >= 1");

  const std::size_t n =
      std::min({pred.size(), gt.size(), std::size_t(cap)});
  // One shared seed for both draws: identical clouds then keep identical
  // subsets, so EMD(P, P) is exactly zero even above the cap.
  const std::uint64_t sub_seed = derive_seed(seed, "emd-subsample");
  const PointCloud a = subsample(pred, n, sub_seed);
  const PointCloud b = subsample(gt, n, sub_seed);

  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = std::sqrt(squared_distance(a.points[i], b.points[j]));

  const std::vector<int> match = solve_assignment(cost, int(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
  return total / double(n);
}

MetricValues evaluate_pair(const PointCloud& pred, const PointCloud& gt,
                           const MetricConfig& cfg) {
  require_nonempty(pred, gt, "evaluate_pair");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (cfg.grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
  if (cfg.emd_cap < 1) throw std::invalid_argument("emd_cap must be at least 1");

  const PointCloud pred_n = normalize_unit_cube(pred);
  const PointCloud gt_n = normalize_unit_cube(gt);
  const RigidTransform t = icp_align(pred_n, gt_n, cfg.icp);
  const PointCloud pred_a = apply_transform(pred_n, t);

  MetricValues m;
  const F1Result f1 = f1_at_tau(pred_a, gt_n, cfg.tau);
  m.f1 = f1.f1;
  m.precision = f1.precision;
  m.recall = f1.recall;
  const auto [iou, dice] = voxel_overlap(voxelize(pred_a, cfg.grid_size),
                                         voxelize(gt_n, cfg.grid_size));
  m.voxel_iou = iou;
  m.voxel_dice = dice;
  m.chamfer = chamfer(pred_a, gt_n);
  m.emd = emd(pred_a, gt_n, cfg.emd_cap, cfg.seed);
  return m;
}

}  // namespace volbench
