#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsmfp/baselines.hpp"
#include "fsmfp/featurize.hpp"
#include "fsmfp/synthgen.hpp"

namespace fsmfp {

/// End-to-end experiment description: one input source, a P sweep, a method
/// set and seeds. Loaded from a small key-value file ("experiment.v1").
struct ExperimentConfig {
  // exactly one of the two input sources
  std::string pcap_path;
  std::string profiles_path;
  double synth_duration = 3600.0;

  std::vector<std::size_t> p_values = {1};
  std::vector<std::string> methods = {"combined_distance"};
  double tau = 600.0;
  std::size_t baseline_samples = 1000;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir;
  bool include_partial = false;
  std::string oui_path;
  std::string env_tag;  // defaults to the input file stem

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig parse(std::string_view text, const std::string& origin);
  void validate() const;  // throws ConfigError
};

/// Known method names for ExperimentConfig.methods.
bool is_known_method(const std::string& method);

struct ReportRow {
  std::string method;
  std::size_t p = 0;
  std::string env;
  double accuracy = 0.0;
  std::size_t n_fingerprints = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

/// Runs the full pipeline (ingest -> filter -> segment -> group(P) -> fsm ->
/// features -> normalize -> method) for every (P, method, seed) cell.
/// Deterministic per seed; never mutates input files.
ExperimentReport run_sweep(const ExperimentConfig& config);

enum class ReportFormat { csv, table, plotdata };
ReportFormat report_format_from_name(std::string_view name);  // throws ConfigError

/// csv = raw rows; table = aligned summary grouped by method; plotdata =
/// per-method (P, mean accuracy, stdev over seeds) series.
/// Throws ConfigError on an empty report.
std::string emit_report(const ExperimentReport& report, ReportFormat format);

/// Round-trips the raw-row CSV produced by emit_report.
ExperimentReport parse_report_csv(std::string_view text);

/// One pipeline stage bundle reused by the CLI and the sweep. `all_groups`
/// keeps every group (partial ones flagged); `groups` holds the evaluated
/// subset, index-aligned with `fsms` and the feature vectors.
struct PipelineOutput {
  std::vector<BurstGroup> all_groups;
  std::vector<BurstGroup> groups;
  std::vector<Fsm> fsms;
  std::vector<FeatureVector> features;    // normalized
  std::vector<FeatureVector> raw_features;
};

/// groups(P) -> fsm -> features -> normalize over pre-segmented bursts.
PipelineOutput fingerprint_pipeline(const std::vector<Burst>& bursts, std::size_t p,
                                    const DeviceMap& device_map, std::uint64_t seed,
                                    bool include_partial);

}  // namespace fsmfp
