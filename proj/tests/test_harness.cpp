#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nifti_ref_writer.hpp"
#include "temp_dir.hpp"
#include "volbench/harness.hpp"
#include "volbench/report.hpp"
#include "volbench/rng.hpp"

using namespace volbench;
using nlohmann::json;
using testutil::TempDir;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8^3 scan with a smooth ramp and a 4^3 box mask, both with an identity
// sform so plane resolution never needs the RAS fallback.
void write_scene(const TempDir& tmp) {
  refnifti::Spec spec;
  spec.dims = {8, 8, 8};
  spec.datatype = 16;
  spec.sform_code = 1;
  spec.srow = {{{1.f, 0.f, 0.f, 0.f}, {0.f, 1.f, 0.f, 0.f}, {0.f, 0.f, 1.f, 0.f}}};

  std::vector<double> scan(512), mask(512);
  std::size_t n = 0;
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i, ++n) {
        scan[n] = 1.0 + i + 10.0 * j + 100.0 * k;
        const bool in_box = i >= 2 && i < 6 && j >= 2 && j < 6 && k >= 2 && k < 6;
        mask[n] = in_box ? 1.0 : 0.0;
      }
  refnifti::write_nifti(tmp.file("scan.nii"), spec, scan);
  refnifti::write_nifti(tmp.file("mask.nii"), spec, mask);

  // Mask present only at k in [0, 2): absent at the axial midpoint k = 4.
  std::vector<double> low(512, 0.0);
  for (int j = 2; j < 6; ++j)
    for (int i = 2; i < 6; ++i) low[std::size_t(i) + 8 * std::size_t(j)] = 1.0;
  refnifti::write_nifti(tmp.file("mask_low.nii"), spec, low);
}

std::string cube_obj(double lo, double hi) {
  auto v = [](double x, double y, double z) {
    return "v " + std::to_string(x) + " " + std::to_string(y) + " " +
           std::to_string(z) + "\n";
  };
  std::string s;
  s += v(lo, lo, lo) + v(hi, lo, lo) + v(hi, hi, lo) + v(lo, hi, lo);
  s += v(lo, lo, hi) + v(hi, lo, hi) + v(hi, hi, hi) + v(lo, hi, hi);
  s += "f 1 2 3 4\nf 5 8 7 6\nf 1 5 6 2\nf 2 6 7 3\nf 3 7 8 4\nf 4 8 5 1\n";
  return s;
}

SampleEntry scene_entry(const TempDir& tmp, const std::string& id = "s1") {
  SampleEntry entry;
  entry.id = id;
  entry.dataset = "demo";
  entry.scan_path = tmp.file("scan.nii");
  entry.mask_path = tmp.file("mask.nii");
  entry.plane = Plane::coronal;
  return entry;
}

HarnessConfig small_config() {
  HarnessConfig cfg;
  cfg.metric.tau = 0.1;
  cfg.sample_points = 200;
  return cfg;
}

MetricRecord ok_record(const std::string& id, const std::string& model,
                       double iou) {
  MetricRecord r;
  r.sample_id = id;
  r.dataset = "demo";
  r.model = model;
  r.plane = "coronal";
  r.values.f1 = 0.5;
  r.values.precision = 0.5;
  r.values.recall = 0.5;
  r.values.voxel_iou = iou;
  r.values.voxel_dice = 2.0 * iou / (1.0 + iou);
  r.values.chamfer = 0.3;
  r.values.emd = 0.4;
  r.seed = 1;
  return r;
}

}  // namespace

TEST_CASE("sample_seed is the tagged derivation and separates records") {
  CHECK(sample_seed(7, "s1", "m1") == derive_seed(7, std::string("s1") + '\x1f' + "m1"));
  CHECK(sample_seed(7, "s1", "m1") == sample_seed(7, "s1", "m1"));
  CHECK(sample_seed(7, "s1", "m1") != sample_seed(7, "s1", "m2"));
  CHECK(sample_seed(7, "s1", "m1") != sample_seed(7, "s2", "m1"));
  CHECK(sample_seed(7, "s1", "m1") != sample_seed(8, "s1", "m1"));
  // The separator keeps ("ab", "c") and ("a", "bc") apart.
  CHECK(sample_seed(7, "ab", "c") != sample_seed(7, "a", "bc"));
}

TEST_CASE("run_sample happy path") {
  TempDir tmp;
  write_scene(tmp);
  write_text(tmp.file("pred.obj"), cube_obj(1.5, 5.5));

  const MetricRecord r = run_sample(scene_entry(tmp), "modelA", tmp.file("pred.obj"),
                                    small_config(), 11);
  CHECK(r.status == RecordStatus::ok);
  CHECK(r.sample_id == "s1");
  CHECK(r.dataset == "demo");
  CHECK(r.model == "modelA");
  CHECK(r.plane == "coronal");
  CHECK(r.seed == sample_seed(11, "s1", "modelA"));
  CHECK(r.values.f1 >= 0.0);
  CHECK(r.values.chamfer >= 0.0);

  SUBCASE("same inputs give identical records") {
    const MetricRecord again = run_sample(scene_entry(tmp), "modelA",
                                          tmp.file("pred.obj"), small_config(), 11);
    CHECK(record_to_json(again) == record_to_json(r));
  }
  SUBCASE("slice export lands at the requested path") {
    const MetricRecord with_slice =
        run_sample(scene_entry(tmp), "modelA", tmp.file("pred.obj"), small_config(),
                   11, tmp.file("slice.png"));
    CHECK(with_slice.status == RecordStatus::ok);
    CHECK(std::filesystem::exists(tmp.file("slice.png")));
  }
}

TEST_CASE("run_sample skip paths") {
  TempDir tmp;
  write_scene(tmp);
  write_text(tmp.file("pred.obj"), cube_obj(1.5, 5.5));

  SUBCASE("prediction file missing") {
    const MetricRecord r = run_sample(scene_entry(tmp), "m", tmp.file("absent.obj"),
                                      small_config(), 11);
    CHECK(r.status == RecordStatus::skipped);
    CHECK(r.skip_reason == "prediction-missing");
  }
  SUBCASE("prediction unreadable") {
    write_text(tmp.file("broken.obj"), "v 0 0\n");  // malformed vertex
    const MetricRecord r = run_sample(scene_entry(tmp), "m", tmp.file("broken.obj"),
                                      small_config(), 11);
    CHECK(r.status == RecordStatus::skipped);
    CHECK(r.skip_reason == "prediction-unreadable");
  }
  SUBCASE("structure absent at the midpoint is the benign skip") {
    SampleEntry entry = scene_entry(tmp);
    entry.mask_path = tmp.file("mask_low.nii");
    entry.plane = Plane::axial;
    const MetricRecord r =
        run_sample(entry, "m", tmp.file("pred.obj"), small_config(), 11);
    CHECK(r.status == RecordStatus::skipped);
    CHECK(r.skip_reason == "midpoint-empty");
  }
  SUBCASE("mask unreadable") {
    SampleEntry entry = scene_entry(tmp);
    entry.mask_path = tmp.file("nothere.nii");
    const MetricRecord r =
        run_sample(entry, "m", tmp.file("pred.obj"), small_config(), 11);
    CHECK(r.status == RecordStatus::skipped);
    CHECK(r.skip_reason == "mask-unreadable");
  }
  SUBCASE("a degenerate prediction still yields a record, not a crash") {
    write_text(tmp.file("flat.obj"), "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
    const MetricRecord r = run_sample(scene_entry(tmp), "m", tmp.file("flat.obj"),
                                      small_config(), 11);
    CHECK(r.status == RecordStatus::skipped);  // zero surface area
    CHECK(r.skip_reason == "prediction-unreadable");
  }
}

TEST_CASE("run_batch writes sorted records, a report, and counts failures") {
  TempDir tmp;
  write_scene(tmp);
  write_text(tmp.file("pred.obj"), cube_obj(1.5, 5.5));
  write_text(tmp.file("pred2.obj"), cube_obj(1.8, 5.2));

  Manifest manifest;
  manifest.config = small_config();
  SampleEntry s1 = scene_entry(tmp, "s1");
  s1.predictions = {{"gone", tmp.file("absent.obj")}, {"good", tmp.file("pred.obj")}};
  SampleEntry s2 = scene_entry(tmp, "s2");
  s2.predictions = {{"good", tmp.file("pred2.obj")}};
  manifest.samples = {s1, s2};

  const RunResult result = run_batch(manifest, 21, tmp.file("out"), 2);
  REQUIRE(result.records.size() == 3);
  CHECK(result.hard_failures == 1);  // the missing prediction

  for (std::size_t i = 1; i < result.records.size(); ++i)
    CHECK(record_order(result.records[i - 1], result.records[i]));

  CHECK(std::filesystem::exists(tmp.file("out/records/s1__good.json")));
  CHECK(std::filesystem::exists(tmp.file("out/records/s1__gone.json")));
  CHECK(std::filesystem::exists(tmp.file("out/records/s2__good.json")));
  REQUIRE(std::filesystem::exists(tmp.file("out/report.json")));

  const json report = json::parse(slurp(tmp.file("out/report.json")));
  CHECK(report["schema_version"] == 1);
  REQUIRE(report["rows"].is_array());
  // Groups: (demo, gone, coronal) all-skipped and (demo, good, coronal) n=2.
  REQUIRE(report["rows"].size() == 2);
  CHECK(report["rows"][0]["model"] == "gone");
  CHECK(report["rows"][0]["n_ok"] == 0);
  CHECK(report["rows"][0]["n_skipped"] == 1);
  CHECK(report["rows"][0]["metrics"]["f1"].is_null());
  CHECK(report["rows"][1]["model"] == "good");
  CHECK(report["rows"][1]["n_ok"] == 2);
  CHECK(report["rows"][1]["metrics"]["f1"]["mean"].is_number());

  SUBCASE("records round-trip through the directory reader") {
    const std::vector<MetricRecord> readback = read_records_dir(tmp.file("out/records"));
    REQUIRE(readback.size() == 3);
    for (std::size_t i = 0; i < readback.size(); ++i)
      CHECK(record_to_json(readback[i]) == record_to_json(result.records[i]));
  }

  SUBCASE("thread count never changes the bytes") {
    const RunResult serial = run_batch(manifest, 21, tmp.file("out1"), 1);
    const RunResult wide = run_batch(manifest, 21, tmp.file("out8"), 8);
    CHECK(serial.hard_failures == wide.hard_failures);
    CHECK(slurp(tmp.file("out1/report.json")) == slurp(tmp.file("out8/report.json")));
    for (const char* name : {"s1__good.json", "s1__gone.json", "s2__good.json"})
      CHECK(slurp(tmp.file("out1/records") / name) ==
            slurp(tmp.file("out8/records") / name));
  }

  SUBCASE("records are isolated: touching one prediction leaves others byte-identical") {
    write_text(tmp.file("pred2.obj"), cube_obj(2.2, 4.8));  // change s2 only
    run_batch(manifest, 21, tmp.file("out_mod"), 2);
    CHECK(slurp(tmp.file("out/records/s1__good.json")) ==
          slurp(tmp.file("out_mod/records/s1__good.json")));
    CHECK(slurp(tmp.file("out/records/s2__good.json")) !=
          slurp(tmp.file("out_mod/records/s2__good.json")));
  }
}

TEST_CASE("run_batch exports slices once per sample when enabled") {
  TempDir tmp;
  write_scene(tmp);
  write_text(tmp.file("pred.obj"), cube_obj(1.5, 5.5));

  Manifest manifest;
  manifest.config = small_config();
  manifest.config.export_slices = true;
  SampleEntry s1 = scene_entry(tmp);
  s1.predictions = {{"a", tmp.file("pred.obj")}, {"b", tmp.file("pred.obj")}};
  manifest.samples = {s1};

  run_batch(manifest, 3, tmp.file("out"), 1);
  CHECK(std::filesystem::exists(tmp.file("out/slices/s1.png")));
}

TEST_CASE("aggregate statistics") {
  std::vector<MetricRecord> records{ok_record("a", "m", 0.1), ok_record("b", "m", 0.2)};

  SUBCASE("sample std over two records") {
    const std::vector<AggregateRow> rows = aggregate(records);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_ok == 2);
    CHECK(rows[0].n_skipped == 0);
    CHECK(rows[0].voxel_iou.mean == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(rows[0].voxel_iou.stddev == doctest::Approx(0.0707106781).epsilon(1e-9));
  }
  SUBCASE("population std divides by n") {
    const std::vector<AggregateRow> rows = aggregate(records, true);
    CHECK(rows[0].voxel_iou.stddev == doctest::Approx(0.05).epsilon(1e-12));
  }
  SUBCASE("singleton groups have zero std") {
    const std::vector<AggregateRow> rows = aggregate({ok_record("a", "m", 0.1)});
    CHECK(rows[0].voxel_iou.stddev == 0.0);
  }
  SUBCASE("skipped records count but do not contribute") {
    MetricRecord skip = ok_record("c", "m", 0.9);
    skip.status = RecordStatus::skipped;
    skip.skip_reason = "midpoint-empty";
    records.push_back(skip);
    const std::vector<AggregateRow> rows = aggregate(records);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_ok == 2);
    CHECK(rows[0].n_skipped == 1);
    CHECK(rows[0].voxel_iou.mean == doctest::Approx(0.15).epsilon(1e-15));
  }
  SUBCASE("groups split by dataset, model and plane, sorted") {
    MetricRecord other = ok_record("a", "zmodel", 0.5);
    records.push_back(other);
    MetricRecord other_plane = ok_record("a", "m", 0.5);
    other_plane.plane = "axial";
    records.push_back(other_plane);
    const std::vector<AggregateRow> rows = aggregate(records);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "m");
    CHECK(rows[0].plane == "axial");
    CHECK(rows[1].model == "m");
    CHECK(rows[1].plane == "coronal");
    CHECK(rows[2].model == "zmodel");
  }
}

TEST_CASE("report rendering") {
  // Values chosen so the formatted markdown cell is a known string.
  std::vector<MetricRecord> records{ok_record("a", "m", 0.074865),
                                    ok_record("b", "m", 0.213735)};
  const std::vector<AggregateRow> rows = aggregate(records);

  SUBCASE("markdown cell formatting and footer") {
    const std::string md = render_report(rows, ReportFormat::markdown);
    CHECK(md.find("## demo") != std::string::npos);
    CHECK(md.find("| Model | Plane | n_ok | n_skipped | F1 | Voxel-IoU | Voxel-Dice | CD | EMD |") !=
          std::string::npos);
    CHECK(md.find("0.1443 ± 0.0982") != std::string::npos);
    CHECK(md.find("Higher is better") != std::string::npos);
  }
  SUBCASE("csv and json carry the same numbers at full precision") {
    const std::string csv = render_report(rows, ReportFormat::csv);
    const std::string js = render_report(rows, ReportFormat::json);
    const json doc = json::parse(js);

    // Pull the f1 mean/std cells out of the csv row.
    const std::size_t header_end = csv.find('\n');
    std::string row = csv.substr(header_end + 1);
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (pos != std::string::npos) {
      const std::size_t comma = row.find(',', pos);
      cells.push_back(row.substr(pos, comma == std::string::npos
                                          ? row.find('\n', pos) - pos
                                          : comma - pos));
      pos = comma == std::string::npos ? comma : comma + 1;
    }
    REQUIRE(cells.size() >= 7);
    CHECK(std::stod(cells[5]) == doc["rows"][0]["metrics"]["f1"]["mean"].get<double>());
    CHECK(std::stod(cells[6]) == doc["rows"][0]["metrics"]["f1"]["std"].get<double>());
  }
  SUBCASE("empty input renders headers only") {
    const std::vector<AggregateRow> none;
    const std::string csv = render_report(none, ReportFormat::csv);
    CHECK(csv.find("dataset,model,plane,n_ok,n_skipped,f1_mean,f1_std") == 0);
    CHECK(csv.find('\n') == csv.size() - 1);
    const std::string md = render_report(none, ReportFormat::markdown);
    CHECK(md.find("_No records._") != std::string::npos);
  }
  SUBCASE("skipped-only group renders empty csv cells and a dash") {
    MetricRecord skip = ok_record("x", "m2", 0.5);
    skip.status = RecordStatus::skipped;
    skip.skip_reason = "midpoint-empty";
    const std::vector<AggregateRow> skiprows = aggregate({skip});
    const std::string csv = render_report(skiprows, ReportFormat::csv);
    CHECK(csv.find("demo,m2,coronal,0,1,,,,,,,,,,") != std::string::npos);
    const std::string md = render_report(skiprows, ReportFormat::markdown);
    CHECK(md.find("—") != std::string::npos);
  }
}

TEST_CASE("parse_report_format") {
  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK(parse_report_format("markdown") == ReportFormat::markdown);
  CHECK_THROWS_AS(parse_report_format("yaml"), std::runtime_error);
}

TEST_CASE("record JSON round-trip") {
  SUBCASE("ok record") {
    const MetricRecord r = ok_record("a", "m", 0.25);
    const json doc = record_to_json(r);
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["status"] == "ok");
    CHECK(doc["metrics"]["voxel_iou"] == 0.25);
    CHECK(doc["metrics"].contains("precision"));
    CHECK(doc["metrics"].contains("recall"));

    const MetricRecord back = record_from_json(doc);
    CHECK(back.sample_id == r.sample_id);
    CHECK(back.dataset == r.dataset);
    CHECK(back.model == r.model);
    CHECK(back.plane == r.plane);
    CHECK(back.status == RecordStatus::ok);
    CHECK(back.seed == r.seed);
    CHECK(back.values.voxel_iou == r.values.voxel_iou);
    CHECK(back.values.emd == r.values.emd);
  }
  SUBCASE("skipped record has null metrics") {
    MetricRecord r = ok_record("a", "m", 0.25);
    r.status = RecordStatus::skipped;
    r.skip_reason = "prediction-missing";
    const json doc = record_to_json(r);
    CHECK(doc["status"] == "skipped");
    CHECK(doc["skip_reason"] == "prediction-missing");
    CHECK(doc["metrics"].is_null());

    const MetricRecord back = record_from_json(doc);
    CHECK(back.status == RecordStatus::skipped);
    CHECK(back.skip_reason == "prediction-missing");
  }
  SUBCASE("schema violations are rejected") {
    CHECK_THROWS_AS(record_from_json(json{{"foo", 1}}), std::runtime_error);
    json doc = record_to_json(ok_record("a", "m", 0.1));
    doc["schema_version"] = 2;
    CHECK_THROWS_WITH_AS(record_from_json(doc), doctest::Contains("schema version"),
                         std::runtime_error);
  }
}
