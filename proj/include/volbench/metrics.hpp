#pragma once
#include "volbench/geometry.hpp"
#include "volbench/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace volbench {

struct MetricConfig {
  double tau = 0.01;
  int grid_size = 64;
  int emd_cap = 2048;
  std::uint64_t seed = 0;
  IcpParams icp;
};

// Occupied cells of a grid_size^3 grid spanning [-1, 1]^3, keyed as
// ix + grid_size * (iy + grid_size * iz).
struct OccupancyGrid {
  int grid_size = 0;
  std::unordered_set<std::uint64_t> occupied;
};

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricValues {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double voxel_iou = 0.0;
  double voxel_dice = 0.0;
  double chamfer = 0.0;
  double emd = 0.0;
};

enum class RecordStatus { ok, skipped };

// One sample's scores plus provenance; `values` is meaningful only when
// status == ok.
struct MetricRecord {
  std::string sample_id;
  std::string dataset;
  std::string model;
  std::string plane;
  RecordStatus status = RecordStatus::ok;
  std::string skip_reason;
  MetricValues values;
  std::uint64_t seed = 0;
};

// Precision = fraction of predicted points within tau of the ground truth,
// recall symmetric, f1 their harmonic mean (0 when both vanish). Clouds
// must be non-empty and share a frame; pred is expected to be aligned.
F1Result f1_at_tau(const PointCloud& pred, const PointCloud& gt, double tau);

// Each point maps to floor((coord + 1) / (2 / grid_size)) per axis,
// clamped into [0, grid_size). Cloud must be in the normalized frame.
OccupancyGrid voxelize(const PointCloud& cloud, int grid_size);

// (IoU, Dice) of two occupancy sets of equal grid size.
std::pair<double, double> voxel_overlap(const OccupancyGrid& pred,
                                        const OccupancyGrid& gt);

// Sum of both directed mean nearest-neighbor l2 distances (not squared).
double chamfer(const PointCloud& pred, const PointCloud& gt);

// Minimum-cost assignment over an n x n row-major cost matrix
// (Jonker-Volgenant style shortest augmenting paths). Returns the matched
// column per row.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n);

// Mean optimal-bijection cost after capping both clouds at
// n = min(|pred|, |gt|, cap). Both sides are subsampled with one seed
// derived from `seed`, so identical clouds keep identical subsets and
// EMD(P, P) stays exactly 0 above the cap.
double emd(const PointCloud& pred, const PointCloud& gt, int cap,
           std::uint64_t seed);

// Full scoring protocol: normalize both clouds, ICP-align the prediction
// onto the ground truth, then compute all five metrics on the aligned
// prediction. Throws on degenerate input; callers that need a skipped
// record catch and tag it.
MetricValues evaluate_pair(const PointCloud& pred, const PointCloud& gt,
                           const MetricConfig& cfg);

}  // namespace volbench
