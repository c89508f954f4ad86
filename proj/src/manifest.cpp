#include "volbench/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "volbench/toml_lite.hpp"

namespace volbench {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("manifest: " + what);
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void check_known_keys(const json& obj, std::initializer_list<const char*> known,
                      const std::string& where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail("unknown key '" + item.key() + "' in " + where);
  }
}

double require_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    fail("'" + std::string(key) + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

int positive_int(const json& value, const char* key, const std::string& where) {
  if (!value.is_number_integer()) fail("'" + std::string(key) + "' in " + where + " must be an integer");
  const long long v = value.get<long long>();
  if (v < 1) fail("'" + std::string(key) + "' in " + where + " must be positive");
  return int(v);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string())
    fail("missing or non-string '" + std::string(key) + "' in " + where);
  return obj[key].get<std::string>();
}

HarnessConfig parse_config(const json& cfg) {
  HarnessConfig out;
  if (cfg.is_null()) return out;
  if (!cfg.is_object()) fail("'config' must be a table");
  check_known_keys(cfg,
                   {"tau", "grid", "icp_threshold", "icp_max_iterations",
                    "icp_convergence_tol", "emd_cap", "sample_points", "use_vertices",
                    "export_slices", "population_std"},
                   "config");
  if (cfg.contains("tau")) {
    out.metric.tau = require_number(cfg, "tau", "config");
    if (!(out.metric.tau > 0)) fail("'tau' must be positive");
  }
  if (cfg.contains("grid")) {
    out.metric.grid_size = positive_int(cfg["grid"], "grid", "config");
    if (out.metric.grid_size < 2) fail("'grid' must be at least 2");
  }
  if (cfg.contains("icp_threshold")) {
    out.metric.icp.max_correspondence_distance =
        require_number(cfg, "icp_threshold", "config");
    if (!(out.metric.icp.max_correspondence_distance > 0))
      fail("'icp_threshold' must be positive");
  }
  if (cfg.contains("icp_max_iterations"))
    out.metric.icp.max_iterations =
        positive_int(cfg["icp_max_iterations"], "icp_max_iterations", "config");
  if (cfg.contains("icp_convergence_tol"))
    out.metric.icp.rmse_convergence_tol = require_number(cfg, "icp_convergence_tol", "config");
  if (cfg.contains("emd_cap"))
    out.metric.emd_cap = positive_int(cfg["emd_cap"], "emd_cap", "config");
  if (cfg.contains("sample_points"))
    out.sample_points = positive_int(cfg["sample_points"], "sample_points", "config");
  if (cfg.contains("use_vertices")) {
    if (!cfg["use_vertices"].is_boolean()) fail("'use_vertices' must be a boolean");
    out.use_vertices = cfg["use_vertices"].get<bool>();
  }
  if (cfg.contains("export_slices")) {
    if (!cfg["export_slices"].is_boolean()) fail("'export_slices' must be a boolean");
    out.export_slices = cfg["export_slices"].get<bool>();
  }
  if (cfg.contains("population_std")) {
    if (!cfg["population_std"].is_boolean()) fail("'population_std' must be a boolean");
    out.population_std = cfg["population_std"].get<bool>();
  }
  return out;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = std::move(buf).str();

  json doc;
  if (path.extension() == ".toml") {
    try {
      doc = parse_toml(text);
    } catch (const std::exception& e) {
      fail(path.string() + ": " + e.what());
    }
  } else {
    try {
      doc = json::parse(text);
    } catch (const std::exception& e) {
      fail(path.string() + ": invalid JSON: " + std::string(e.what()));
    }
  }
  if (!doc.is_object()) fail("top level must be a table");
  check_known_keys(doc, {"global_seed", "config", "samples"}, "manifest");

  Manifest manifest;
  if (doc.contains("global_seed")) {
    if (!doc["global_seed"].is_number_integer()) fail("'global_seed' must be an integer");
    manifest.global_seed = std::uint64_t(doc["global_seed"].get<long long>());
    manifest.has_global_seed = true;
  }
  manifest.config = parse_config(doc.contains("config") ? doc["config"] : json());

  if (!doc.contains("samples") || !doc["samples"].is_array())
    fail("'samples' must be an array of tables");

  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::set<std::string> seen_ids;
  for (const json& s : doc["samples"]) {
    if (!s.is_object()) fail("each sample must be a table");
    check_known_keys(s, {"id", "dataset", "scan", "mask", "label", "plane", "predictions"},
                     "sample");
    SampleEntry entry;
    entry.id = require_string(s, "id", "sample");
    if (!valid_identifier(entry.id))
      fail("sample id '" + entry.id + "' contains characters outside [A-Za-z0-9._-]");
    if (!seen_ids.insert(entry.id).second) fail("duplicate sample id '" + entry.id + "'");
    entry.dataset = require_string(s, "dataset", "sample '" + entry.id + "'");
    if (entry.dataset.empty()) fail("empty dataset in sample '" + entry.id + "'");
    entry.scan_path = resolve(require_string(s, "scan", "sample '" + entry.id + "'"));
    entry.mask_path = resolve(require_string(s, "mask", "sample '" + entry.id + "'"));
    if (s.contains("label")) {
      if (!s["label"].is_number_integer())
        fail("'label' in sample '" + entry.id + "' must be an integer");
      entry.label = s["label"].get<int>();
    }
    const std::string plane = require_string(s, "plane", "sample '" + entry.id + "'");
    try {
      entry.plane = parse_plane(plane);
    } catch (const std::exception& e) {
      fail("sample '" + entry.id + "': " + e.what());
    }
    if (!s.contains("predictions") || !s["predictions"].is_object() ||
        s["predictions"].empty())
      fail("sample '" + entry.id + "' needs a non-empty 'predictions' table");
    for (const auto& item : s["predictions"].items()) {
      if (!valid_identifier(item.key()))
        fail("model name '" + item.key() + "' contains characters outside [A-Za-z0-9._-]");
      if (!item.value().is_string())
        fail("prediction path for model '" + item.key() + "' must be a string");
      entry.predictions.emplace_back(item.key(), resolve(item.value().get<std::string>()));
    }
    std::sort(entry.predictions.begin(), entry.predictions.end());
    manifest.samples.push_back(std::move(entry));
  }
  return manifest;
}

}  // namespace volbench
