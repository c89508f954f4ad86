// volbench: single-slice-to-3D reconstruction evaluation harness.
//
// Subcommands: gt, slice, eval, run, report. Exit codes: 0 success,
// 1 any sample hard-failed, 2 usage or manifest error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "volbench/harness.hpp"
#include "volbench/manifest.hpp"
#include "volbench/mesh_io.hpp"
#include "volbench/metrics.hpp"
#include "volbench/nifti.hpp"
#include "volbench/report.hpp"
#include "volbench/rng.hpp"
#include "volbench/volume_ops.hpp"

namespace {

using namespace volbench;
namespace fs = std::filesystem;

std::optional<std::uint64_t> env_u64(const char* name) {
  const char* value = std::getenv(name);
  if (!value || !*value) return std::nullopt;
  try {
    return std::uint64_t(std::stoull(value));
  } catch (const std::exception&) {
    throw std::runtime_error(std::string(name) + " is not an integer: " + value);
  }
}

// A .nii/.nii.gz ground truth is a mask to extract; .ply/.obj loads directly.
PointCloud load_gt_cloud(const fs::path& path, std::optional<int> label) {
  const std::string name = path.filename().string();
  if (name.ends_with(".nii") || name.ends_with(".nii.gz")) {
    const MaskVolume mask = label ? read_mask_label(path, *label) : read_mask(path);
    return surface_points(mask);
  }
  MeshOrCloud loaded = load_mesh(path);
  if (auto* cloud = std::get_if<PointCloud>(&loaded)) return std::move(*cloud);
  throw std::runtime_error(path.string() +
                           " is a triangle mesh; ground truth must be a point "
                           "cloud or a segmentation mask");
}

PointCloud load_pred_cloud(const fs::path& path, int sample_points, std::uint64_t seed,
                           bool use_vertices) {
  MeshOrCloud loaded = load_mesh(path);
  if (auto* mesh = std::get_if<TriangleMesh>(&loaded))
    return use_vertices ? mesh_vertices(*mesh)
                        : sample_surface(*mesh, std::size_t(sample_points),
                                         derive_seed(seed, "mesh-sample"));
  return std::get<PointCloud>(std::move(loaded));
}

int cmd_gt(const fs::path& mask_path, std::optional<int> label, const fs::path& out) {
  const MaskVolume mask =
      label ? read_mask_label(mask_path, *label) : read_mask(mask_path);
  const PointCloud cloud = surface_points(mask);
  write_point_cloud_ply(cloud, out);
  std::cout << "wrote " << cloud.size() << " surface points to " << out.string() << "\n";
  return 0;
}

int cmd_slice(const fs::path& scan_path, const fs::path& mask_path,
              const std::string& plane_str, std::optional<int> label,
              const fs::path& out) {
  const Plane plane = parse_plane(plane_str);
  const Volume scan = parse_nifti(scan_path);
  const MaskVolume mask =
      label ? read_mask_label(mask_path, *label) : read_mask(mask_path);
  const Slice2D slice = midpoint_masked_slice(scan, mask, plane);
  export_slice(slice, out);
  std::cout << "wrote " << plane_str << " slice " << slice.slice_index << " ("
            << slice.width << "x" << slice.height << ") to " << out.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path,
             const MetricConfig& cfg, int sample_points, bool use_vertices,
             std::optional<int> label, const fs::path& out) {
  const PointCloud gt = load_gt_cloud(gt_path, label);
  const PointCloud pred = load_pred_cloud(pred_path, sample_points, cfg.seed, use_vertices);
  const MetricValues values = evaluate_pair(pred, gt, cfg);

  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["pred"] = pred_path.string();
  doc["gt"] = gt_path.string();
  doc["config"] = {{"tau", cfg.tau},
                   {"grid", cfg.grid_size},
                   {"icp_threshold", cfg.icp.max_correspondence_distance},
                   {"emd_cap", cfg.emd_cap},
                   {"sample_points", sample_points},
                   {"seed", cfg.seed}};
  doc["metrics"] = {{"f1", values.f1},
                    {"precision", values.precision},
                    {"recall", values.recall},
                    {"voxel_iou", values.voxel_iou},
                    {"voxel_dice", values.voxel_dice},
                    {"chamfer", values.chamfer},
                    {"emd", values.emd}};
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out.string());
  file << doc.dump(2) << "\n";
  std::cout << doc["metrics"].dump(2) << "\n";
  return 0;
}

int cmd_run(const fs::path& manifest_path, const fs::path& out_dir,
            std::optional<int> threads_flag, std::optional<std::uint64_t> seed_flag) {
  Manifest manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // Seed precedence: --seed, then the manifest, then VOLBENCH_SEED, then 0.
  std::uint64_t seed = 0;
  if (const auto env = env_u64("VOLBENCH_SEED")) seed = *env;
  if (manifest.has_global_seed) seed = manifest.global_seed;
  if (seed_flag) seed = *seed_flag;

  int threads = 0;
  if (const auto env = env_u64("VOLBENCH_THREADS")) threads = int(*env);
  if (threads_flag) threads = *threads_flag;
  if (threads <= 0) threads = int(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;

  const RunResult result = run_batch(manifest, seed, out_dir, threads);
  int ok = 0, skipped = 0;
  for (const MetricRecord& r : result.records)
    (r.status == RecordStatus::ok ? ok : skipped)++;
  std::cout << result.records.size() << " records (" << ok << " ok, " << skipped
            << " skipped, " << result.hard_failures << " hard failures) -> "
            << out_dir.string() << "\n";
  return result.hard_failures > 0 ? 1 : 0;
}

int cmd_report(const fs::path& records_dir, const std::string& format_str,
               const fs::path& out, bool population_std) {
  const ReportFormat format = parse_report_format(format_str);
  const std::vector<MetricRecord> records = read_records_dir(records_dir);
  write_report(aggregate(records, population_std), format, out);
  std::cout << "wrote " << format_str << " report for " << records.size()
            << " records to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for single-slice 3D reconstruction evaluation"};
  app.require_subcommand(1);

  // gt
  auto* gt = app.add_subcommand("gt", "Extract the ground-truth surface point cloud");
  std::string gt_mask, gt_out;
  std::optional<int> gt_label;
  gt->add_option("--mask", gt_mask, "Segmentation mask (NIfTI-1)")->required();
  gt->add_option("--label", gt_label, "Mask value selecting one structure");
  gt->add_option("--out", gt_out, "Output PLY path")->required();

  // slice
  auto* slice = app.add_subcommand("slice", "Export the masked midpoint slice");
  std::string sl_scan, sl_mask, sl_plane, sl_out;
  std::optional<int> sl_label;
  slice->add_option("--scan", sl_scan, "Scan volume (NIfTI-1)")->required();
  slice->add_option("--mask", sl_mask, "Segmentation mask (NIfTI-1)")->required();
  slice->add_option("--plane", sl_plane, "coronal or axial")->required();
  slice->add_option("--label", sl_label, "Mask value selecting one structure");
  slice->add_option("--out", sl_out, "Output PNG path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate one prediction against ground truth");
  std::string ev_pred, ev_gt, ev_out;
  MetricConfig ev_cfg;
  int ev_sample_points = 10000;
  bool ev_use_vertices = false;
  std::optional<int> ev_label;
  std::optional<std::uint64_t> ev_seed;
  eval->add_option("--pred", ev_pred, "Predicted mesh or point cloud (.obj/.ply)")->required();
  eval->add_option("--gt", ev_gt, "Ground truth (.ply cloud or NIfTI mask)")->required();
  eval->add_option("--tau", ev_cfg.tau, "F1 distance threshold");
  eval->add_option("--grid", ev_cfg.grid_size, "Voxelization grid size");
  eval->add_option("--icp-threshold", ev_cfg.icp.max_correspondence_distance,
                   "ICP correspondence threshold");
  eval->add_option("--emd-cap", ev_cfg.emd_cap, "EMD subsample cap");
  eval->add_option("--sample-points", ev_sample_points, "Points sampled from a mesh");
  eval->add_option("--seed", ev_seed, "RNG seed");
  eval->add_flag("--use-vertices", ev_use_vertices, "Use mesh vertices instead of sampling");
  eval->add_option("--label", ev_label, "Mask value selecting one structure");
  eval->add_option("--out", ev_out, "Output JSON path")->required();

  // run
  auto* run = app.add_subcommand("run", "Run a full manifest");
  std::string rn_manifest, rn_out;
  std::optional<int> rn_threads;
  std::optional<std::uint64_t> rn_seed;
  run->add_option("--manifest", rn_manifest, "Manifest (.json or .toml)")->required();
  run->add_option("--out", rn_out, "Output directory")->required();
  run->add_option("--threads", rn_threads, "Worker threads");
  run->add_option("--seed", rn_seed, "Global seed");

  // report
  auto* report = app.add_subcommand("report", "Aggregate records into a report");
  std::string rp_records, rp_format, rp_out;
  bool rp_population = false;
  report->add_option("--records", rp_records, "Directory of record JSON files")->required();
  report->add_option("--format", rp_format, "csv, json, or markdown")->required();
  report->add_option("--out", rp_out, "Output path")->required();
  report->add_flag("--population-std", rp_population, "Divide by n instead of n-1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }

  try {
    if (gt->parsed()) return cmd_gt(gt_mask, gt_label, gt_out);
    if (slice->parsed()) return cmd_slice(sl_scan, sl_mask, sl_plane, sl_label, sl_out);
    if (eval->parsed()) {
      if (ev_seed) {
        ev_cfg.seed = *ev_seed;
      } else if (const auto env = env_u64("VOLBENCH_SEED")) {
        ev_cfg.seed = *env;
      }
      return cmd_eval(ev_pred, ev_gt, ev_cfg, ev_sample_points, ev_use_vertices,
                      ev_label, ev_out);
    }
    if (run->parsed()) return cmd_run(rn_manifest, rn_out, rn_threads, rn_seed);
    if (report->parsed()) return cmd_report(rp_records, rp_format, rp_out, rp_population);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
