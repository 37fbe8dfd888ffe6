#include "fsmfp/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fsmfp/errors.hpp"
#include "fsmfp/ingest.hpp"
#include "fsmfp/learn.hpp"
#include "fsmfp/rand.hpp"
#include "fsmfp/similarity.hpp"
#include "fsmfp/store.hpp"

namespace fsmfp {

namespace {

const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods = {
      "combined_distance", "euclidean", "manhattan", "cosine",  "rf",
      "lr",                "svm",       "ie_baseline", "seq_baseline"};
  return methods;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

bool is_known_method(const std::string& method) { return known_methods().count(method) != 0; }

void ExperimentConfig::validate() const {
  if (pcap_path.empty() == profiles_path.empty())
    throw ConfigError("experiment: exactly one input (pcap or profiles) required");
  if (p_values.empty()) throw ConfigError("experiment: no P values");
  for (auto p : p_values)
    if (p < 1) throw ConfigError("experiment: P values must be >= 1");
  if (methods.empty()) throw ConfigError("experiment: no methods");
  for (const auto& m : methods)
    if (!is_known_method(m)) throw ConfigError("experiment: unknown method '" + m + "'");
  if (seeds.empty()) throw ConfigError("experiment: no seeds");
  if (tau <= 0) throw ConfigError("experiment: tau must be > 0");
  if (!profiles_path.empty() && synth_duration <= 0)
    throw ConfigError("experiment: duration must be > 0");
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  bool saw_version = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line.erase(0, start);

    if (!saw_version) {
      if (line != "experiment.v1")
        throw FormatError(origin + ": config must start with 'experiment.v1'");
      saw_version = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + " line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    const auto vstart = value.find_first_not_of(" \t");
    value.erase(0, vstart == std::string::npos ? value.size() : vstart);

    if (key == "pcap") {
      cfg.pcap_path = value;
    } else if (key == "profiles") {
      cfg.profiles_path = value;
    } else if (key == "duration") {
      cfg.synth_duration = std::stod(value);
    } else if (key == "p") {
      cfg.p_values.clear();
      for (const auto& tok : split_ws(value)) cfg.p_values.push_back(std::stoul(tok));
    } else if (key == "methods") {
      cfg.methods = split_ws(value);
    } else if (key == "tau") {
      cfg.tau = std::stod(value);
    } else if (key == "samples") {
      cfg.baseline_samples = std::stoul(value);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& tok : split_ws(value)) cfg.seeds.push_back(std::stoull(tok));
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "include_partial") {
      cfg.include_partial = (value == "true" || value == "1" || value == "yes");
    } else if (key == "oui") {
      cfg.oui_path = value;
    } else if (key == "env") {
      cfg.env_tag = value;
    } else {
      throw ConfigError(origin + " line " + std::to_string(lineno) + ": unknown key '" + key +
                        "'");
    }
  }
  if (!saw_version) throw FormatError(origin + ": empty config");
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open experiment config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

PipelineOutput fingerprint_pipeline(const std::vector<Burst>& bursts, std::size_t p,
                                    const DeviceMap& device_map, std::uint64_t seed,
                                    bool include_partial) {
  PipelineOutput out;
  out.all_groups = group_bursts(bursts, p, device_map);
  out.groups = out.all_groups;
  if (!include_partial) {
    out.groups.erase(std::remove_if(out.groups.begin(), out.groups.end(),
                                    [](const BurstGroup& g) { return g.partial; }),
                     out.groups.end());
  }
  out.fsms.reserve(out.groups.size());
  out.raw_features.reserve(out.groups.size());
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    out.fsms.push_back(build_fsm(out.groups[g]));
    out.raw_features.push_back(
        extract_features(out.fsms.back(), out.groups[g], derive_seed(seed, g)));
  }
  if (out.raw_features.size() >= 2) out.features = normalize_features(out.raw_features);
  return out;
}

namespace {

struct PreparedInput {
  std::vector<ManagementFrame> frames;
  DeviceMap device_map;
  std::string env;
};

PreparedInput prepare_input(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedInput input;
  if (!cfg.profiles_path.empty()) {
    const auto profiles = load_profiles(cfg.profiles_path);
    auto trace = generate_trace(profiles, cfg.synth_duration, seed);
    input.device_map = device_map_from_truth(trace.frames, trace.truth);
    input.frames = std::move(trace.frames);
    input.env = cfg.env_tag.empty()
                    ? std::filesystem::path(cfg.profiles_path).stem().string()
                    : cfg.env_tag;
  } else {
    auto parsed = parse_capture_file(cfg.pcap_path);
    input.frames = std::move(parsed.frames);
    // ground truth on real captures: persistent (non-randomized) MACs
    OuiTable oui;
    if (!cfg.oui_path.empty()) oui = load_oui_table(cfg.oui_path);
    for (const auto& f : input.frames) {
      if (!is_randomized_mac(f.src, oui)) input.device_map.emplace(f.src, f.src.to_string());
    }
    input.env = cfg.env_tag.empty() ? std::filesystem::path(cfg.pcap_path).stem().string()
                                    : cfg.env_tag;
  }
  return input;
}

double distance_method_accuracy(const std::string& method, const PipelineOutput& pipe) {
  std::vector<std::string> devices;
  devices.reserve(pipe.features.size());
  for (const auto& v : pipe.features) devices.push_back(v.device_id);

  if (method == "combined_distance") {
    const auto packed = pack_vectors(pipe.features);
    const auto e = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::euclidean);
    const auto m = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::manhattan);
    const auto c = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::cosine);
    return nearest_neighbor_match(combined_matrix(e, m, c), devices).accuracy;
  }
  MetricTag tag;
  if (method == "euclidean") {
    tag = MetricTag::euclidean;
  } else if (method == "manhattan") {
    tag = MetricTag::manhattan;
  } else {
    tag = MetricTag::cosine;
  }
  return nearest_neighbor_match(pairwise_matrix(pipe.features, tag), devices).accuracy;
}

double classifier_method_accuracy(const std::string& method, const PipelineOutput& pipe,
                                  std::size_t p, std::uint64_t seed) {
  // leakage-safe split: devices first, then the scaler is fitted on the
  // training side only
  const auto split = split_by_device(pipe.raw_features, 0.8, seed);
  const auto scaler = FeatureScaler::fit(split.train);
  std::vector<FeatureVector> train_vecs, test_vecs;
  train_vecs.reserve(split.train.size());
  test_vecs.reserve(split.test.size());
  for (const auto& v : split.train) train_vecs.push_back(scaler.apply(v));
  for (const auto& v : split.test) test_vecs.push_back(scaler.apply(v));

  const auto train_pairs =
      build_pairs(train_vecs, PairPolicy::balanced, seed, static_cast<int>(p));
  const auto test_pairs = build_pairs(test_vecs, PairPolicy::balanced, derive_seed(seed, 1),
                                      static_cast<int>(p));
  const auto model = train(model_kind_from_name(method), train_pairs, Hyperparameters{}, seed);
  return evaluate_classifier(model, test_pairs).accuracy;
}

double baseline_method_accuracy(const std::string& method, const PipelineOutput& pipe,
                                const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto events = probe_events(pipe.groups);
  DiscriminationConfig dc;
  dc.samples = cfg.baseline_samples;
  dc.tau = cfg.tau;
  dc.seed = seed;
  return discrimination_accuracy(events, method == "ie_baseline" ? AssocMethod::ie
                                                                 : AssocMethod::seq,
                                 dc, nullptr);
}

}  // namespace

namespace {

// rethrow with the failing stage named, keeping the exit code
template <typename Fn>
auto at_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.exit_code(), "stage " + stage + ": " + e.what());
  }
}

}  // namespace

ExperimentReport run_sweep(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;

  for (const std::uint64_t seed : config.seeds) {
    const PreparedInput input =
        at_stage("ingest", [&] { return prepare_input(config, seed); });
    const auto filtered = at_stage("filter", [&] { return filter_clients(input.frames); });
    const auto bursts =
        at_stage("segment", [&] { return segment_bursts(filtered.client_frames); });

    for (const std::size_t p : config.p_values) {
      const auto pipe = at_stage("fingerprint p=" + std::to_string(p), [&] {
        return fingerprint_pipeline(bursts, p, input.device_map, seed, config.include_partial);
      });
      for (const auto& method : config.methods) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string stage =
            method + " p=" + std::to_string(p) + " seed=" + std::to_string(seed);
        const double accuracy = at_stage(stage, [&] {
          if (method == "combined_distance" || method == "euclidean" ||
              method == "manhattan" || method == "cosine") {
            return distance_method_accuracy(method, pipe);
          }
          if (method == "rf" || method == "lr" || method == "svm") {
            return classifier_method_accuracy(method, pipe, p, seed);
          }
          return baseline_method_accuracy(method, pipe, config, seed);
        });
        const auto t1 = std::chrono::steady_clock::now();
        ReportRow row;
        row.method = method;
        row.p = p;
        row.env = input.env;
        row.accuracy = accuracy;
        row.n_fingerprints = pipe.features.size();
        row.seed = seed;
        row.wall_time = std::chrono::duration<double>(t1 - t0).count();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

ReportFormat report_format_from_name(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "table") return ReportFormat::table;
  if (name == "plotdata") return ReportFormat::plotdata;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (report.rows.empty()) throw ConfigError("emit_report: empty report");
  std::ostringstream out;

  if (format == ReportFormat::csv) {
    out << "method,p,env,accuracy,n_fingerprints,seed,wall_time\n";
    for (const auto& r : report.rows) {
      out << r.method << ',' << r.p << ',' << r.env << ',' << store::format_double(r.accuracy)
          << ',' << r.n_fingerprints << ',' << r.seed << ','
          << store::format_double(r.wall_time) << '\n';
    }
    return out.str();
  }

  if (format == ReportFormat::table) {
    std::map<std::string, std::vector<const ReportRow*>> by_method;
    for (const auto& r : report.rows) by_method[r.method].push_back(&r);
    char buf[160];
    for (const auto& [method, rows] : by_method) {
      out << method << "\n";
      std::snprintf(buf, sizeof(buf), "  %4s %-16s %10s %8s %6s\n", "P", "env", "accuracy",
                    "n", "seed");
      out << buf;
      for (const auto* r : rows) {
        std::snprintf(buf, sizeof(buf), "  %4zu %-16s %10.4f %8zu %6llu\n", r->p,
                      r->env.c_str(), r->accuracy, r->n_fingerprints,
                      static_cast<unsigned long long>(r->seed));
        out << buf;
      }
    }
    return out.str();
  }

  // plotdata: per-method (P, mean accuracy, stdev over seeds)
  std::map<std::string, std::map<std::size_t, std::vector<double>>> series;
  for (const auto& r : report.rows) series[r.method][r.p].push_back(r.accuracy);
  out << "method,p,mean_accuracy,stdev\n";
  for (const auto& [method, per_p] : series) {
    for (const auto& [p, vals] : per_p) {
      double mean = 0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size());
      out << method << ',' << p << ',' << store::format_double(mean) << ','
          << store::format_double(std::sqrt(var)) << '\n';
    }
  }
  return out.str();
}

ExperimentReport parse_report_csv(std::string_view text) {
  ExperimentReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 7) throw RecordParseError(lineno, "report csv needs 7 columns");
    ReportRow r;
    r.method = cols[0];
    r.p = std::stoul(cols[1]);
    r.env = cols[2];
    r.accuracy = std::stod(cols[3]);
    r.n_fingerprints = std::stoul(cols[4]);
    r.seed = std::stoull(cols[5]);
    r.wall_time = std::stod(cols[6]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace fsmfp
