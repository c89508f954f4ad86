#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "volbench/metrics.hpp"
#include "volbench/volume_ops.hpp"

namespace volbench {

// Batch-level knobs on top of the per-pair MetricConfig.
struct HarnessConfig {
  MetricConfig metric;
  int sample_points = 10000;   // points sampled from each predicted mesh
  bool use_vertices = false;   // take mesh vertices instead of surface samples
  bool export_slices = false;  // write the midpoint masked slice per sample
  bool population_std = false; // divisor n instead of n-1 in aggregation
};

struct SampleEntry {
  std::string id;
  std::string dataset;
  std::filesystem::path scan_path;
  std::filesystem::path mask_path;
  std::optional<int> label;  // mask value selecting one structure
  Plane plane = Plane::axial;
  // Sorted by model name so iteration order is stable.
  std::vector<std::pair<std::string, std::filesystem::path>> predictions;
};

struct Manifest {
  std::vector<SampleEntry> samples;
  HarnessConfig config;
  std::uint64_t global_seed = 0;
  bool has_global_seed = false;  // distinguishes "manifest said 0" from "unset"
};

// JSON (canonical) or TOML by extension. Validates the schema: unique ids,
// id/model charset [A-Za-z0-9._-], plane in {coronal, axial} (sagittal is
// rejected outright), known keys only. Relative paths resolve against the
// manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace volbench
