#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fsmfp/errors.hpp"
#include "fsmfp/evalharness.hpp"
#include "fsmfp/store.hpp"
#include "support.hpp"

using namespace fsmfp;

namespace {

// two well-separated single-device profiles: disjoint state sets, timing and
// IE tags far apart
std::string separable_profiles_text() {
  return R"(profiles.v1
[profile quick-prober]
devices = 1
states = ProbeRequest/B
initial = ProbeRequest/B
row ProbeRequest/B = 1.0
frames_per_burst = uniform 3 5
intra_gap = uniform 0.01 0.05
inter_gap = uniform 2 4
bursts_per_device = constant 12
seq_increment = constant 1
ie_tags = 0:1.0 1:1.0
mac_policy = persistent

[profile chatty-joiner]
devices = 1
states = ProbeRequest/B Authentication/U AssociationRequest/U
initial = ProbeRequest/B
row ProbeRequest/B = 0.2 0.5 0.3
row Authentication/U = 0.1 0.3 0.6
row AssociationRequest/U = 0.4 0.3 0.3
frames_per_burst = uniform 14 20
intra_gap = uniform 0.4 0.9
inter_gap = uniform 8 15
bursts_per_device = constant 12
seq_increment = uniform 5 9
ie_tags = 45:1.0 127:1.0 221:1.0
mac_policy = persistent
)";
}

std::string write_tmp(const char* name, const std::string& text) {
  const std::string path = std::string("/tmp/fsmfp_eval_") + name;
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return path;
}

}  // namespace

TEST_SUITE("evalharness") {

TEST_CASE("experiment config parsing and validation") {
  const auto cfg = ExperimentConfig::parse(R"(experiment.v1
profiles = /tmp/p.cfg
duration = 900
p = 1 2 4
methods = combined_distance rf
tau = 600
seeds = 1 2 3
out = /tmp/out
)",
                                           "test");
  CHECK(cfg.profiles_path == "/tmp/p.cfg");
  CHECK(cfg.p_values == std::vector<std::size_t>{1, 2, 4});
  CHECK(cfg.seeds.size() == 3);

  CHECK_THROWS_AS(ExperimentConfig::parse("experiment.v1\np = 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::parse("experiment.v1\nprofiles = x\nmethods = warp_drive\n", "t"),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("nope\n", "t"), FormatError);
  CHECK(is_known_method("seq_baseline"));
  CHECK_FALSE(is_known_method("warp_drive"));
}

TEST_CASE("separable two-profile fixture reaches accuracy 1.0 at P=1") {
  const auto path = write_tmp("separable.cfg", separable_profiles_text());
  ExperimentConfig cfg;
  cfg.profiles_path = path;
  cfg.synth_duration = 600;
  cfg.p_values = {1};
  cfg.methods = {"combined_distance"};
  cfg.seeds = {4};
  const auto report = run_sweep(cfg);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].accuracy == 1.0);
  CHECK(report.rows[0].n_fingerprints >= 20);
  CHECK(report.rows[0].env == "fsmfp_eval_separable");  // input file stem
}

TEST_CASE("run_sweep is deterministic per seed") {
  const auto path = write_tmp("det.cfg", separable_profiles_text());
  ExperimentConfig cfg;
  cfg.profiles_path = path;
  cfg.synth_duration = 400;
  cfg.p_values = {1, 2};
  cfg.methods = {"combined_distance", "euclidean"};
  cfg.seeds = {9, 10};
  const auto a = run_sweep(cfg);
  const auto b = run_sweep(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].method == b.rows[i].method);
    CHECK(a.rows[i].p == b.rows[i].p);
    CHECK(a.rows[i].accuracy == b.rows[i].accuracy);  // bit-for-bit
    CHECK(a.rows[i].n_fingerprints == b.rows[i].n_fingerprints);
  }
}

TEST_CASE("emit_report: csv, round-trip, plotdata stdev, empty error") {
  ExperimentReport report;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ReportRow r;
    r.method = "combined_distance";
    r.p = 4;
    r.env = "lab";
    r.accuracy = 0.5 + 0.1 * static_cast<double>(seed);
    r.n_fingerprints = 100;
    r.seed = seed;
    r.wall_time = 0.01;
    report.rows.push_back(r);
  }

  const auto csv = emit_report(report, ReportFormat::csv);
  CHECK(csv.rfind("method,p,env,accuracy", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows

  const auto parsed = parse_report_csv(csv);
  REQUIRE(parsed.rows.size() == 3);
  CHECK(parsed.rows[1].accuracy == doctest::Approx(0.7));

  const auto plot = emit_report(report, ReportFormat::plotdata);
  // mean 0.7, population stdev sqrt(2/300)... recompute directly
  double mean = (0.6 + 0.7 + 0.8) / 3.0;
  double var = 0;
  for (double v : {0.6, 0.7, 0.8}) var += (v - mean) * (v - mean);
  var /= 3.0;
  const std::string expect = "combined_distance,4," + store::format_double(mean) + "," +
                             store::format_double(std::sqrt(var));
  CHECK(plot.find(expect) != std::string::npos);

  const auto table = emit_report(report, ReportFormat::table);
  CHECK(table.find("combined_distance") != std::string::npos);

  CHECK_THROWS_AS(emit_report(ExperimentReport{}, ReportFormat::csv), ConfigError);
}

TEST_CASE("single row gives header plus one csv line") {
  ExperimentReport report;
  ReportRow r;
  r.method = "rf";
  r.p = 1;
  r.env = "x";
  r.accuracy = 1.0;
  r.seed = 0;
  report.rows.push_back(r);
  const auto csv = emit_report(report, ReportFormat::csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("fingerprint_pipeline excludes partial groups unless asked") {
  auto p = testsupport::probe_profile("p");
  p.bursts_per_device = Dist::constant(7);
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 2}}, 800.0, 2);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);

  const auto without = fingerprint_pipeline(bursts, 3, devmap, 2, false);
  const auto with = fingerprint_pipeline(bursts, 3, devmap, 2, true);
  CHECK(with.groups.size() == without.groups.size() + 2);  // one partial per device
  for (const auto& g : without.groups) CHECK_FALSE(g.partial);
  // partial groups stay in the stored view either way
  CHECK(without.all_groups.size() == with.groups.size());
}

TEST_CASE("sweep rows cover every (method, P, seed) cell") {
  const auto path = write_tmp("cells.cfg", separable_profiles_text());
  ExperimentConfig cfg;
  cfg.profiles_path = path;
  cfg.synth_duration = 300;
  cfg.p_values = {1, 3};
  cfg.methods = {"euclidean", "manhattan"};
  cfg.seeds = {1, 2};
  const auto report = run_sweep(cfg);
  CHECK(report.rows.size() == 2 * 2 * 2);
}

}  // TEST_SUITE
