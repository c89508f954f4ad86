#include "volbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "volbench/mesh_io.hpp"
#include "volbench/nifti.hpp"
#include "volbench/rng.hpp"
#include "volbench/volume_ops.hpp"

namespace volbench {
namespace {

// Benign skips: the sample legitimately has no midpoint structure. Anything
// else is a pipeline failure and flips the process exit code.
bool benign_skip(const std::string& reason) { return reason == "midpoint-empty"; }

std::mutex log_mutex;

void log_skip(const MetricRecord& record, const std::string& detail) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << "skip " << record.sample_id << "/" << record.model << " ["
            << record.skip_reason << "] " << detail << "\n";
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t global_seed, const std::string& sample_id,
                          const std::string& model) {
  // 0x1f separator keeps ("ab", "c") distinct from ("a", "bc"); the manifest
  // charset excludes control characters.
  return derive_seed(global_seed, sample_id + '\x1f' + model);
}

MetricRecord run_sample(const SampleEntry& entry, const std::string& model,
                        const std::filesystem::path& prediction_path,
                        const HarnessConfig& cfg, std::uint64_t global_seed,
                        const std::filesystem::path& slice_path) {
  MetricRecord record;
  record.sample_id = entry.id;
  record.dataset = entry.dataset;
  record.model = model;
  record.plane = plane_name(entry.plane);
  record.seed = sample_seed(global_seed, entry.id, model);

  auto skip = [&](const char* reason, const std::string& detail) {
    record.status = RecordStatus::skipped;
    record.skip_reason = reason;
    log_skip(record, detail);
    return record;
  };

  MaskVolume mask;
  try {
    mask = entry.label ? read_mask_label(entry.mask_path, *entry.label)
                       : read_mask(entry.mask_path);
  } catch (const std::exception& e) {
    return skip("mask-unreadable", e.what());
  }

  Volume scan;
  try {
    scan = parse_nifti(entry.scan_path);
  } catch (const std::exception& e) {
    return skip("scan-unreadable", e.what());
  }

  // The protocol's model input is the masked midpoint slice; a sample whose
  // structure misses that slice never reaches a model, so it skips benignly.
  Slice2D slice;
  try {
    slice = midpoint_masked_slice(scan, mask, entry.plane);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.find("structure absent at midpoint") != std::string::npos)
      return skip("midpoint-empty", what);
    return skip("slice-failed", what);
  }
  if (!slice_path.empty()) {
    try {
      export_slice(slice, slice_path);
    } catch (const std::exception& e) {
      return skip("slice-export-failed", e.what());
    }
  }

  PointCloud gt;
  try {
    gt = surface_points(mask);
  } catch (const std::exception& e) {
    return skip("mask-empty", e.what());
  }

  if (!std::filesystem::exists(prediction_path))
    return skip("prediction-missing", prediction_path.string());

  PointCloud pred;
  try {
    MeshOrCloud loaded = load_mesh(prediction_path);
    if (auto* mesh = std::get_if<TriangleMesh>(&loaded)) {
      pred = cfg.use_vertices
                 ? mesh_vertices(*mesh)
                 : sample_surface(*mesh, std::size_t(cfg.sample_points),
                                  derive_seed(record.seed, "mesh-sample"));
    } else {
      pred = std::get<PointCloud>(std::move(loaded));
    }
  } catch (const std::exception& e) {
    return skip("prediction-unreadable", e.what());
  }

  try {
    MetricConfig metric_cfg = cfg.metric;
    metric_cfg.seed = record.seed;
    record.values = evaluate_pair(pred, gt, metric_cfg);
  } catch (const std::exception& e) {
    return skip("evaluation-failed", e.what());
  }
  record.status = RecordStatus::ok;
  return record;
}

RunResult run_batch(const Manifest& manifest, std::uint64_t global_seed,
                    const std::filesystem::path& out_dir, int threads) {
  struct Task {
    const SampleEntry* entry;
    const std::string* model;
    const std::filesystem::path* prediction;
    std::filesystem::path slice_path;  // empty unless this task exports
  };

  const std::filesystem::path records_dir = out_dir / "records";
  std::filesystem::create_directories(records_dir);
  if (manifest.config.export_slices)
    std::filesystem::create_directories(out_dir / "slices");

  std::vector<Task> tasks;
  for (const SampleEntry& entry : manifest.samples) {
    bool first_model = true;
    for (const auto& [model, path] : entry.predictions) {
      Task task{&entry, &model, &path, {}};
      // One exporter per sample: predictions share the slice, and a single
      // writer keeps the parallel run free of same-file races.
      if (manifest.config.export_slices && first_model)
        task.slice_path = out_dir / "slices" / (entry.id + ".png");
      first_model = false;
      tasks.push_back(std::move(task));
    }
  }

  std::vector<MetricRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      try {
        records[t] = run_sample(*task.entry, *task.model, *task.prediction,
                                manifest.config, global_seed, task.slice_path);
      } catch (const std::exception& e) {
        MetricRecord& r = records[t];
        r.sample_id = task.entry->id;
        r.dataset = task.entry->dataset;
        r.model = *task.model;
        r.plane = plane_name(task.entry->plane);
        r.seed = sample_seed(global_seed, task.entry->id, *task.model);
        r.status = RecordStatus::skipped;
        r.skip_reason = "internal-error";
        log_skip(r, e.what());
      }
    }
  };

  const int pool = std::max(1, std::min<int>(threads, int(tasks.size())));
  if (pool <= 1 || tasks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    workers.reserve(std::size_t(pool));
    for (int w = 0; w < pool; ++w) workers.emplace_back(worker);
    for (std::thread& w : workers) w.join();
  }

  RunResult result;
  result.records = std::move(records);
  std::sort(result.records.begin(), result.records.end(), record_order);

  for (const MetricRecord& record : result.records) {
    if (record.status == RecordStatus::skipped && !benign_skip(record.skip_reason))
      ++result.hard_failures;
    const std::filesystem::path file =
        records_dir / (record.sample_id + "__" + record.model + ".json");
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << record_to_json(record).dump(2) << "\n";
  }

  write_report(aggregate(result.records, manifest.config.population_std),
               ReportFormat::json, out_dir / "report.json");
  return result;
}

}  // namespace volbench
