#include "oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "volbench/rng.hpp"

namespace oracle {

using volbench::Frame;
using volbench::Mat3;
using volbench::MetricConfig;
using volbench::MetricValues;
using volbench::PointCloud;
using volbench::Vec3;

double nn_dist2_brute(const std::vector<Vec3>& pts, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts) {
    const double dx = q.x() - p.x();
    const double dy = q.y() - p.y();
    const double dz = q.z() - p.z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best) best = d2;
  }
  return best;
}

double chamfer_brute(const PointCloud& pred, const PointCloud& gt) {
  double forward = 0.0;
  for (const Vec3& p : pred.points) forward += std::sqrt(nn_dist2_brute(gt.points, p));
  double backward = 0.0;
  for (const Vec3& q : gt.points) backward += std::sqrt(nn_dist2_brute(pred.points, q));
  return forward / double(pred.size()) + backward / double(gt.size());
}

double emd_enumerate(const PointCloud& a, const PointCloud& b) {
  const std::size_t n = a.size();
  if (n != b.size() || n == 0) throw std::invalid_argument("emd_enumerate: bad sizes");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = a.points[i];
      const Vec3& q = b.points[std::size_t(perm[i])];
      const double dx = p.x() - q.x();
      const double dy = p.y() - q.y();
      const double dz = p.z() - q.z();
      total += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / double(n);
}

// Classic six-step Munkres. Zeros are produced by exact subtraction
// (x - min where x == min), so double comparisons against 0.0 are sound.
std::vector<int> munkres(std::vector<double> cost, int n) {
  auto at = [&](int r, int c) -> double& { return cost[std::size_t(r) * n + c]; };
  std::vector<std::vector<int>> mark(n, std::vector<int>(n, 0));  // 1 star, 2 prime
  std::vector<char> row_cover(n, 0), col_cover(n, 0);

  for (int r = 0; r < n; ++r) {
    double m = at(r, 0);
    for (int c = 1; c < n; ++c) m = std::min(m, at(r, c));
    for (int c = 0; c < n; ++c) at(r, c) -= m;
  }
  for (int c = 0; c < n; ++c) {
    double m = at(0, c);
    for (int r = 1; r < n; ++r) m = std::min(m, at(r, c));
    for (int r = 0; r < n; ++r) at(r, c) -= m;
  }

  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (at(r, c) == 0.0 && !row_cover[r] && !col_cover[c]) {
        mark[r][c] = 1;
        row_cover[r] = col_cover[c] = 1;
      }
  std::fill(row_cover.begin(), row_cover.end(), 0);
  std::fill(col_cover.begin(), col_cover.end(), 0);

  auto cover_starred_columns = [&]() {
    int covered = 0;
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r)
        if (mark[r][c] == 1) {
          col_cover[c] = 1;
          break;
        }
      covered += col_cover[c];
    }
    return covered;
  };

  while (cover_starred_columns() < n) {
    for (;;) {
      // Find an uncovered zero and prime it.
      int zr = -1, zc = -1;
      for (int r = 0; r < n && zr < 0; ++r) {
        if (row_cover[r]) continue;
        for (int c = 0; c < n; ++c)
          if (!col_cover[c] && at(r, c) == 0.0) {
            zr = r;
            zc = c;
            break;
          }
      }
      if (zr < 0) {
        // No uncovered zero: shift by the minimum uncovered value.
        double delta = std::numeric_limits<double>::infinity();
        for (int r = 0; r < n; ++r)
          if (!row_cover[r])
            for (int c = 0; c < n; ++c)
              if (!col_cover[c]) delta = std::min(delta, at(r, c));
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) {
            if (row_cover[r]) at(r, c) += delta;
            if (!col_cover[c]) at(r, c) -= delta;
          }
        continue;
      }
      mark[zr][zc] = 2;
      int star_col = -1;
      for (int c = 0; c < n; ++c)
        if (mark[zr][c] == 1) {
          star_col = c;
          break;
        }
      if (star_col >= 0) {
        row_cover[zr] = 1;
        col_cover[star_col] = 0;
        continue;
      }
      // Augment: alternate starred/primed from the uncovered prime.
      std::vector<std::pair<int, int>> path{{zr, zc}};
      for (;;) {
        int r_star = -1;
        for (int r = 0; r < n; ++r)
          if (mark[r][path.back().second] == 1) {
            r_star = r;
            break;
          }
        if (r_star < 0) break;
        path.push_back({r_star, path.back().second});
        int c_prime = -1;
        for (int c = 0; c < n; ++c)
          if (mark[r_star][c] == 2) {
            c_prime = c;
            break;
          }
        path.push_back({r_star, c_prime});
      }
      for (const auto& [r, c] : path) mark[r][c] = mark[r][c] == 1 ? 0 : 1;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          if (mark[r][c] == 2) mark[r][c] = 0;
      std::fill(row_cover.begin(), row_cover.end(), 0);
      std::fill(col_cover.begin(), col_cover.end(), 0);
      break;
    }
  }

  std::vector<int> match(n, -1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (mark[r][c] == 1) match[r] = c;
  return match;
}

namespace {

PointCloud normalize_ref(const PointCloud& cloud) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : cloud.points) centroid += p;
  centroid /= double(cloud.size());
  double scale = 0.0;
  for (const Vec3& p : cloud.points)
    scale = std::max(scale, (p - centroid).cwiseAbs().maxCoeff());
  if (scale < 1e-12) scale = 1.0;
  PointCloud out;
  out.frame = Frame::normalized;
  for (const Vec3& p : cloud.points) out.points.push_back((p - centroid) / scale);
  return out;
}

// The documented deterministic draw: partial Fisher-Yates over indices,
// mt19937_64 stream, rejection-sampled bounds.
PointCloud subsample_ref(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (cloud.size() <= n) return cloud;
  std::vector<std::uint32_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(seed);
  PointCloud out;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + volbench::bounded_uint64(rng, cloud.size() - i);
    std::swap(order[i], order[j]);
    out.points.push_back(cloud.points[order[i]]);
  }
  return out;
}

int brute_nn_index(const std::vector<Vec3>& pts, const Vec3& q, double* d2_out) {
  double best = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = q.x() - pts[i].x();
    const double dy = q.y() - pts[i].y();
    const double dz = q.z() - pts[i].z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best) {
      best = d2;
      best_index = int(i);
    }
  }
  if (d2_out) *d2_out = best;
  return best_index;
}

double rmse_ref(const std::vector<Vec3>& pts, const std::vector<Vec3>& target,
                double max_distance) {
  const double max_d2 = max_distance * max_distance;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Vec3& p : pts) {
    const double d2 = nn_dist2_brute(target, p);
    if (d2 <= max_d2) {
      sum += d2;
      ++count;
    }
  }
  return count == 0 ? 0.0 : std::sqrt(sum / double(count));
}

struct RigidRef {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

RigidRef solve_rigid_ref(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  Vec3 sm = Vec3::Zero(), dm = Vec3::Zero();
  for (const Vec3& p : src) sm += p;
  for (const Vec3& q : dst) dm += q;
  sm /= double(src.size());
  dm /= double(dst.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    cov += (src[i] - sm) * (dst[i] - dm).transpose();
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixV() * flip * svd.matrixU().transpose();
  }
  RigidRef t;
  t.rotation = r;
  t.translation = dm - r * sm;
  return t;
}

std::vector<Vec3> icp_ref(const PointCloud& source, const PointCloud& target,
                          const volbench::IcpParams& params) {
  const double max_d2 =
      params.max_correspondence_distance * params.max_correspondence_distance;
  const double identity_rmse =
      rmse_ref(source.points, target.points, params.max_correspondence_distance);

  RigidRef total;
  std::vector<Vec3> current = source.points;
  double prev_rmse = identity_rmse;
  double final_rmse = identity_rmse;
  bool solved_any = false;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::vector<Vec3> pair_src, pair_dst;
    for (const Vec3& p : current) {
      double d2;
      const int j = brute_nn_index(target.points, p, &d2);
      if (d2 <= max_d2) {
        pair_src.push_back(p);
        pair_dst.push_back(target.points[std::size_t(j)]);
      }
    }
    if (pair_src.size() < 3) break;
    const RigidRef step = solve_rigid_ref(pair_src, pair_dst);
    RigidRef next;
    next.rotation = step.rotation * total.rotation;
    next.translation = step.rotation * total.translation + step.translation;
    total = next;
    solved_any = true;
    for (std::size_t i = 0; i < current.size(); ++i)
      current[i] = total.rotation * source.points[i] + total.translation;
    final_rmse = rmse_ref(current, target.points, params.max_correspondence_distance);
    if (prev_rmse - final_rmse < params.rmse_convergence_tol) break;
    prev_rmse = final_rmse;
  }

  if (!solved_any || final_rmse > identity_rmse) return source.points;
  return current;
}

std::uint64_t voxel_key(const Vec3& p, int grid) {
  const double voxel = 2.0 / double(grid);
  std::uint64_t key = 0;
  for (int a = 2; a >= 0; --a) {
    long idx = long(std::floor((p[a] + 1.0) / voxel));
    idx = std::clamp(idx, 0l, long(grid) - 1);
    key = key * std::uint64_t(grid) + std::uint64_t(idx);
  }
  return key;
}

}  // namespace

MetricValues evaluate_pair_reference(const PointCloud& pred, const PointCloud& gt,
                                     const MetricConfig& cfg) {
  const PointCloud pred_n = normalize_ref(pred);
  const PointCloud gt_n = normalize_ref(gt);

  PointCloud pred_a;
  pred_a.frame = Frame::normalized;
  pred_a.points = icp_ref(pred_n, gt_n, cfg.icp);

  MetricValues m;

  const double tau2 = cfg.tau * cfg.tau;
  std::size_t pred_hits = 0, gt_hits = 0;
  for (const Vec3& p : pred_a.points)
    if (nn_dist2_brute(gt_n.points, p) <= tau2) ++pred_hits;
  for (const Vec3& q : gt_n.points)
    if (nn_dist2_brute(pred_a.points, q) <= tau2) ++gt_hits;
  m.precision = double(pred_hits) / double(pred_a.size());
  m.recall = double(gt_hits) / double(gt_n.size());
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;

  std::unordered_set<std::uint64_t> vp, vg;
  for (const Vec3& p : pred_a.points) vp.insert(voxel_key(p, cfg.grid_size));
  for (const Vec3& q : gt_n.points) vg.insert(voxel_key(q, cfg.grid_size));
  std::size_t inter = 0;
  for (std::uint64_t k : vp) inter += vg.count(k);
  const double uni = double(vp.size()) + double(vg.size()) - double(inter);
  m.voxel_iou = double(inter) / uni;
  m.voxel_dice = 2.0 * double(inter) / (double(vp.size()) + double(vg.size()));

  m.chamfer = chamfer_brute(pred_a, gt_n);

  const std::size_t n =
      std::min({pred_a.size(), gt_n.size(), std::size_t(cfg.emd_cap)});
  const std::uint64_t sub_seed = volbench::derive_seed(cfg.seed, "emd-subsample");
  const PointCloud a = subsample_ref(pred_a, n, sub_seed);
  const PointCloud b = subsample_ref(gt_n, n, sub_seed);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = a.points[i].x() - b.points[j].x();
      const double dy = a.points[i].y() - b.points[j].y();
      const double dz = a.points[i].z() - b.points[j].z();
      cost[i * n + j] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  const std::vector<int> match = munkres(cost, int(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + std::size_t(match[i])];
  m.emd = total / double(n);

  return m;
}

}  // namespace oracle
