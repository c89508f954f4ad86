#include "volbench/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

namespace volbench {
namespace {

using nlohmann::json;

constexpr int kRecordSchemaVersion = 1;
constexpr int kReportSchemaVersion = 1;

MetricAggregate mean_std(const std::vector<double>& values, bool population) {
  MetricAggregate out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / double(n);
  if (n == 1 && !population) return out;  // sample std of a singleton is 0 by decision
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(ss / double(population ? n : n - 1));
  return out;
}

// Shortest round-trip decimal form, for full-precision CSV cells.
std::string format_full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const MetricAggregate& m) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", m.mean, m.stddev);
  return buf;
}

const char* const kMetricHeaders[] = {"f1", "voxel_iou", "voxel_dice", "chamfer", "emd"};

std::array<const MetricAggregate*, 5> metric_fields(const AggregateRow& row) {
  return {&row.f1, &row.voxel_iou, &row.voxel_dice, &row.chamfer, &row.emd};
}

std::string render_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "dataset,model,plane,n_ok,n_skipped";
  for (const char* m : kMetricHeaders) {
    out += ',';
    out += m;
    out += "_mean,";
    out += m;
    out += "_std";
  }
  out += '\n';
  for (const AggregateRow& row : rows) {
    out += row.dataset + ',' + row.model + ',' + row.plane + ',' +
           std::to_string(row.n_ok) + ',' + std::to_string(row.n_skipped);
    for (const MetricAggregate* m : metric_fields(row)) {
      if (row.n_ok == 0) {
        out += ",,";
      } else {
        out += ',';
        out += format_full(m->mean);
        out += ',';
        out += format_full(m->stddev);
      }
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const std::vector<AggregateRow>& rows) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  json arr = json::array();
  for (const AggregateRow& row : rows) {
    json r;
    r["dataset"] = row.dataset;
    r["model"] = row.model;
    r["plane"] = row.plane;
    r["n_ok"] = row.n_ok;
    r["n_skipped"] = row.n_skipped;
    json metrics;
    const auto fields = metric_fields(row);
    for (std::size_t m = 0; m < fields.size(); ++m) {
      if (row.n_ok == 0) {
        metrics[kMetricHeaders[m]] = nullptr;
      } else {
        metrics[kMetricHeaders[m]] = {{"mean", fields[m]->mean}, {"std", fields[m]->stddev}};
      }
    }
    r["metrics"] = std::move(metrics);
    arr.push_back(std::move(r));
  }
  doc["rows"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string render_markdown(const std::vector<AggregateRow>& rows) {
  std::string out;
  std::string dataset;
  for (const AggregateRow& row : rows) {
    if (row.dataset != dataset) {
      dataset = row.dataset;
      if (!out.empty()) out += '\n';
      out += "## " + dataset + "\n\n";
      out += "| Model | Plane | n_ok | n_skipped | F1 | Voxel-IoU | Voxel-Dice | CD | EMD |\n";
      out += "| --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";
    }
    out += "| " + row.model + " | " + row.plane + " | " + std::to_string(row.n_ok) +
           " | " + std::to_string(row.n_skipped);
    for (const MetricAggregate* m : metric_fields(row))
      out += " | " + (row.n_ok == 0 ? std::string("—") : format_cell(*m));
    out += " |\n";
  }
  if (rows.empty()) out += "_No records._\n";
  out += "\nHigher is better for F1, Voxel-IoU, and Voxel-Dice; lower is better for CD and EMD.\n";
  return out;
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    bool population_std) {
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<const MetricRecord*>>
      groups;
  for (const MetricRecord& r : records)
    groups[{r.dataset, r.model, r.plane}].push_back(&r);

  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    AggregateRow row;
    std::tie(row.dataset, row.model, row.plane) = key;
    std::vector<double> f1, iou, dice, cd, em;
    for (const MetricRecord* r : group) {
      if (r->status != RecordStatus::ok) {
        ++row.n_skipped;
        continue;
      }
      ++row.n_ok;
      f1.push_back(r->values.f1);
      iou.push_back(r->values.voxel_iou);
      dice.push_back(r->values.voxel_dice);
      cd.push_back(r->values.chamfer);
      em.push_back(r->values.emd);
    }
    row.f1 = mean_std(f1, population_std);
    row.voxel_iou = mean_std(iou, population_std);
    row.voxel_dice = mean_std(dice, population_std);
    row.chamfer = mean_std(cd, population_std);
    row.emd = mean_std(em, population_std);
    rows.push_back(std::move(row));
  }
  return rows;  // map iteration is already (dataset, model, plane) order
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "markdown") return ReportFormat::markdown;
  throw std::runtime_error("unknown report format '" + name +
                           "' (expected csv, json, or markdown)");
}

std::string render_report(const std::vector<AggregateRow>& rows, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return render_csv(rows);
    case ReportFormat::json: return render_json(rows);
    case ReportFormat::markdown: return render_markdown(rows);
  }
  return {};
}

void write_report(const std::vector<AggregateRow>& rows, ReportFormat format,
                  const std::filesystem::path& path) {
  const std::string text = render_report(rows, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json record_to_json(const MetricRecord& record) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["sample_id"] = record.sample_id;
  doc["dataset"] = record.dataset;
  doc["model"] = record.model;
  doc["plane"] = record.plane;
  doc["seed"] = record.seed;
  if (record.status == RecordStatus::ok) {
    doc["status"] = "ok";
    doc["metrics"] = {{"f1", record.values.f1},
                      {"precision", record.values.precision},
                      {"recall", record.values.recall},
                      {"voxel_iou", record.values.voxel_iou},
                      {"voxel_dice", record.values.voxel_dice},
                      {"chamfer", record.values.chamfer},
                      {"emd", record.values.emd}};
  } else {
    doc["status"] = "skipped";
    doc["skip_reason"] = record.skip_reason;
    doc["metrics"] = nullptr;
  }
  return doc;
}

MetricRecord record_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version") ||
      !doc["schema_version"].is_number_integer())
    throw std::runtime_error("not a metric record");
  if (doc["schema_version"].get<int>() != kRecordSchemaVersion)
    throw std::runtime_error("unsupported record schema version " +
                             doc["schema_version"].dump());
  MetricRecord record;
  record.sample_id = doc.at("sample_id").get<std::string>();
  record.dataset = doc.at("dataset").get<std::string>();
  record.model = doc.at("model").get<std::string>();
  record.plane = doc.at("plane").get<std::string>();
  record.seed = doc.at("seed").get<std::uint64_t>();
  const std::string status = doc.at("status").get<std::string>();
  if (status == "ok") {
    record.status = RecordStatus::ok;
    const json& m = doc.at("metrics");
    record.values.f1 = m.at("f1").get<double>();
    record.values.precision = m.at("precision").get<double>();
    record.values.recall = m.at("recall").get<double>();
    record.values.voxel_iou = m.at("voxel_iou").get<double>();
    record.values.voxel_dice = m.at("voxel_dice").get<double>();
    record.values.chamfer = m.at("chamfer").get<double>();
    record.values.emd = m.at("emd").get<double>();
  } else if (status == "skipped") {
    record.status = RecordStatus::skipped;
    record.skip_reason = doc.value("skip_reason", "");
  } else {
    throw std::runtime_error("unknown record status '" + status + "'");
  }
  return record;
}

bool record_order(const MetricRecord& a, const MetricRecord& b) {
  return std::tie(a.dataset, a.model, a.plane, a.sample_id) <
         std::tie(b.dataset, b.model, b.plane, b.sample_id);
}

std::vector<MetricRecord> read_records_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<MetricRecord> records;
  records.reserve(files.size());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    json doc;
    try {
      in >> doc;
      records.push_back(record_from_json(doc));
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ": " + e.what());
    }
  }
  std::sort(records.begin(), records.end(), record_order);
  return records;
}

}  // namespace volbench
