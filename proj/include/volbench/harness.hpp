#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "volbench/manifest.hpp"
#include "volbench/metrics.hpp"
#include "volbench/report.hpp"

namespace volbench {

// Stable per-record seed: records are reproducible in isolation and
// independent of worker scheduling.
std::uint64_t sample_seed(std::uint64_t global_seed, const std::string& sample_id,
                          const std::string& model);

// Full single-record pipeline: mask -> midpoint-slice check -> ground-truth
// surface -> prediction cloud -> metrics. Any stage failure yields a skipped
// record with a machine-readable reason ("prediction-missing",
// "midpoint-empty", ...) rather than throwing. slice_path, when non-empty,
// receives the exported midpoint slice PNG.
MetricRecord run_sample(const SampleEntry& entry, const std::string& model,
                        const std::filesystem::path& prediction_path,
                        const HarnessConfig& cfg, std::uint64_t global_seed,
                        const std::filesystem::path& slice_path = {});

struct RunResult {
  std::vector<MetricRecord> records;  // sorted by (dataset, model, plane, id)
  int hard_failures = 0;              // skips other than benign midpoint-empty
};

// Evaluates every (sample, model) pair over a bounded worker pool, then
// writes records/<id>__<model>.json plus an aggregated report.json under
// out_dir. Output bytes are independent of the thread count.
RunResult run_batch(const Manifest& manifest, std::uint64_t global_seed,
                    const std::filesystem::path& out_dir, int threads);

}  // namespace volbench
