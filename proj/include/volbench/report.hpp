#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volbench/metrics.hpp"

namespace volbench {

struct MetricAggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

// One (dataset, model, plane) group. Means cover ok records only; skipped
// records count toward n_skipped, never toward the statistics.
struct AggregateRow {
  std::string dataset;
  std::string model;
  std::string plane;
  int n_ok = 0;
  int n_skipped = 0;
  MetricAggregate f1;
  MetricAggregate voxel_iou;
  MetricAggregate voxel_dice;
  MetricAggregate chamfer;
  MetricAggregate emd;
};

// Groups by (dataset, model, plane), sorted the same way. Sample std
// (divisor n-1, 0 when n = 1) by default; population std behind the flag.
std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    bool population_std = false);

enum class ReportFormat { csv, json, markdown };
ReportFormat parse_report_format(const std::string& name);

std::string render_report(const std::vector<AggregateRow>& rows, ReportFormat format);
void write_report(const std::vector<AggregateRow>& rows, ReportFormat format,
                  const std::filesystem::path& path);

// Per-record JSON (schema-versioned). Skipped records carry null metrics.
nlohmann::json record_to_json(const MetricRecord& record);
MetricRecord record_from_json(const nlohmann::json& doc);

// All *.json records in a directory, sorted by (dataset, model, plane, id).
std::vector<MetricRecord> read_records_dir(const std::filesystem::path& dir);

// Stable sort key shared by the harness and the readers.
bool record_order(const MetricRecord& a, const MetricRecord& b);

}  // namespace volbench
