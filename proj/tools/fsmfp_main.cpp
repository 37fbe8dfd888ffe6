// fsmfp: passive Wi-Fi device fingerprinting from management-frame behavior.
//
// Pipeline subcommands (synth, ingest, sanitize, segment, fingerprint, match,
// train, baseline, eval, report) exchange versioned record files; see the
// README for the walkthrough. Exit codes: 0 ok, 1 usage, 2 input format
// error, 3 evaluation error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "fsmfp/baselines.hpp"
#include "fsmfp/errors.hpp"
#include "fsmfp/evalharness.hpp"
#include "fsmfp/ingest.hpp"
#include "fsmfp/learn.hpp"
#include "fsmfp/rand.hpp"
#include "fsmfp/similarity.hpp"
#include "fsmfp/store.hpp"
#include "fsmfp/synthgen.hpp"
#include "fsmfp/version.hpp"

namespace fs = std::filesystem;
using namespace fsmfp;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string oui_path;
};

std::string out_path(const GlobalOpts& g, const char* name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

DeviceMap device_map_for(const std::vector<ManagementFrame>& frames,
                         const std::string& truth_path, const std::string& oui_path) {
  if (!truth_path.empty()) {
    const auto truth = read_truth_csv(truth_path);
    return device_map_from_truth(frames, truth);
  }
  // persistent (non-randomized) MACs act as their own ground truth
  OuiTable oui;
  if (!oui_path.empty()) oui = load_oui_table(oui_path);
  DeviceMap map;
  for (const auto& f : frames)
    if (!is_randomized_mac(f.src, oui)) map.emplace(f.src, f.src.to_string());
  return map;
}

void cmd_synth(const GlobalOpts& g, const std::string& profiles_path, double duration) {
  const auto profiles = load_profiles(profiles_path);
  const auto trace = generate_trace(profiles, duration, g.seed);
  write_capture_file(out_path(g, "capture.pcap"), trace.frames);
  write_truth_csv(out_path(g, "truth.csv"), trace.truth);
  std::size_t devices = trace.truth.device_profile.size();
  std::printf("synth: %zu frames, %zu devices, %zu profiles -> %s\n", trace.frames.size(),
              devices, profiles.size(), g.out_dir.c_str());
}

void cmd_ingest(const GlobalOpts& g, const std::string& pcap_path, std::string capture_id) {
  const auto result = parse_capture_file(pcap_path, std::move(capture_id));
  const std::string provenance = "source=" + stem_of(pcap_path);
  store::write_frames(out_path(g, "frames.v1"), result.frames, provenance);
  const auto& s = result.stats;
  std::printf(
      "ingest: %llu packets, %llu management frames kept; dropped %llu non-management, "
      "%llu malformed, %llu unknown-subtype, %llu fragments\n",
      static_cast<unsigned long long>(s.packets), static_cast<unsigned long long>(s.management),
      static_cast<unsigned long long>(s.non_management),
      static_cast<unsigned long long>(s.malformed),
      static_cast<unsigned long long>(s.unknown_subtype),
      static_cast<unsigned long long>(s.fragments_dropped));
}

void cmd_sanitize(const GlobalOpts& g, const std::string& frames_path, const std::string& salt) {
  auto frames = store::read_frames(frames_path);
  if (frames.empty()) throw ConfigError("sanitize: input has no frames");
  auto out = sanitize(std::move(frames), salt);
  store::write_frames(out_path(g, "frames.v1"), out, "sanitized source=" + stem_of(frames_path));
  std::printf("sanitize: %zu frames rewritten -> %s\n", out.size(), g.out_dir.c_str());
}

void cmd_segment(const GlobalOpts& g, const std::string& frames_path, double gap) {
  const auto frames = store::read_frames(frames_path);
  const auto filtered = filter_clients(frames);
  const auto bursts = segment_bursts(filtered.client_frames, gap);
  // ordinals must reference the frames file: re-map through the filter
  // by re-running segmentation on the original indexing
  std::vector<std::size_t> kept;
  kept.reserve(filtered.client_frames.size());
  {
    MacSet excluded = filtered.excluded_macs;
    for (std::size_t i = 0; i < frames.size(); ++i)
      if (!excluded.count(frames[i].src)) kept.push_back(i);
  }
  auto rebased = bursts;
  for (auto& b : rebased)
    for (auto& ordinal : b.ordinals) ordinal = kept[ordinal];
  store::write_bursts(out_path(g, "bursts.v1"), rebased,
                      "gap=" + store::format_double(gap) + " source=" + stem_of(frames_path));
  std::printf("segment: %zu bursts over %zu client frames (%zu MACs excluded as APs)\n",
              rebased.size(), filtered.client_frames.size(), filtered.excluded_macs.size());
}

void cmd_fingerprint(const GlobalOpts& g, const std::string& frames_path,
                     const std::string& bursts_path, std::size_t p,
                     const std::string& truth_path, bool include_partial) {
  const auto frames = store::read_frames(frames_path);
  const auto bursts = store::read_bursts(bursts_path, frames);
  const auto devmap = device_map_for(frames, truth_path, g.oui_path);
  const auto pipe = fingerprint_pipeline(bursts, p, devmap, g.seed, include_partial);
  const std::string provenance =
      "p=" + std::to_string(p) + " seed=" + std::to_string(g.seed);
  store::write_groups(out_path(g, "groups.v1"), pipe.all_groups, provenance);
  store::write_fsms(out_path(g, "fsm.v1"), pipe.fsms, provenance);
  store::write_features(out_path(g, "features.v1"), pipe.features, provenance);
  store::write_features_csv(out_path(g, "features.csv"), pipe.features);
  std::printf("fingerprint: %zu groups at P=%zu -> %zu feature vectors\n", pipe.groups.size(),
              p, pipe.features.size());
}

void cmd_match(const GlobalOpts& g, const std::string& features_path, const std::string& metric,
               bool block, const std::string& dump_matrix, const std::string& model_path) {
  const auto features = store::read_features(features_path);
  std::vector<std::string> devices;
  devices.reserve(features.size());
  for (const auto& v : features) devices.push_back(v.device_id);

  MatchResult result;
  if (!model_path.empty()) {
    // secondary mode: rank candidates by classifier score instead of distance
    result = match_with_model(features, store::read_model(model_path));
  } else if (block) {
    if (metric != "combined")
      throw ConfigError("match: --block implies --metric combined");
    result = match_blocked(features, devices);
  } else if (metric == "combined") {
    const auto packed = pack_vectors(features);
    const auto e = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::euclidean);
    const auto m = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::manhattan);
    const auto c = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::cosine);
    const auto combined = combined_matrix(e, m, c);
    if (!dump_matrix.empty()) write_matrix_file(dump_matrix, combined);
    result = nearest_neighbor_match(combined, devices);
  } else {
    MetricTag tag;
    if (metric == "euclidean") {
      tag = MetricTag::euclidean;
    } else if (metric == "manhattan") {
      tag = MetricTag::manhattan;
    } else if (metric == "cosine") {
      tag = MetricTag::cosine;
    } else {
      throw ConfigError("match: unknown metric '" + metric + "'");
    }
    const auto matrix = pairwise_matrix(features, tag);
    if (!dump_matrix.empty()) write_matrix_file(dump_matrix, matrix);
    result = nearest_neighbor_match(matrix, devices);
  }

  std::ofstream csv(out_path(g, "matches.csv"), std::ios::trunc);
  csv << "fingerprint_id,predicted_id,correct\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    csv << features[i].fingerprint_id << ',' << features[result.predicted[i]].fingerprint_id
        << ',' << (result.eligible[i] ? (result.correct[i] ? "1" : "0") : "-") << '\n';
  }
  const std::string label = model_path.empty() ? "metric=" + metric : "model-scored";
  std::printf("match: %s accuracy=%.4f (%zu/%zu eligible)\n", label.c_str(), result.accuracy,
              result.correct_count, result.eligible_count);
}

std::string p_from_provenance(const std::string& provenance) {
  // fingerprint writes "p=N seed=M"; fall back to "-" for foreign files
  std::istringstream in(provenance);
  std::string token;
  while (in >> token)
    if (token.rfind("p=", 0) == 0) return token.substr(2);
  return "-";
}

void cmd_train(const GlobalOpts& g, const std::string& features_path, const std::string& model,
               double train_fraction) {
  const auto features = store::read_features(features_path);
  const auto header = store::read_record_file(features_path, "features.v1").header;
  const auto split = split_by_device(features, train_fraction, g.seed);
  const auto scaler = FeatureScaler::fit(split.train);
  std::vector<FeatureVector> train_vecs, test_vecs;
  for (const auto& v : split.train) train_vecs.push_back(scaler.apply(v));
  for (const auto& v : split.test) test_vecs.push_back(scaler.apply(v));

  const auto train_pairs = build_pairs(train_vecs, PairPolicy::balanced, g.seed);
  const auto test_pairs = build_pairs(test_vecs, PairPolicy::balanced, derive_seed(g.seed, 1));
  const auto kind = model_kind_from_name(model);
  const auto trained = train(kind, train_pairs, Hyperparameters{}, g.seed);
  const auto outcome = evaluate_classifier(trained, test_pairs);

  store::write_model(out_path(g, "model.v1"), trained, "seed=" + std::to_string(g.seed));
  std::ofstream csv(out_path(g, "eval.csv"), std::ios::trunc);
  csv << "p,model,accuracy,tp,fp,tn,fn\n";
  csv << p_from_provenance(header.provenance) << ',' << model << ','
      << store::format_double(outcome.accuracy) << ',' << outcome.tp << ',' << outcome.fp
      << ',' << outcome.tn << ',' << outcome.fn << '\n';
  std::printf("train: %s accuracy=%.4f on %zu test pairs (%zu train pairs)\n", model.c_str(),
              outcome.accuracy, test_pairs.size(), train_pairs.size());
}

void cmd_baseline(const GlobalOpts& g, const std::string& frames_path,
                  const std::string& bursts_path, const std::string& groups_path,
                  const std::string& features_path, const std::string& method, double tau,
                  std::size_t samples) {
  const auto frames = store::read_frames(frames_path);
  const auto bursts = store::read_bursts(bursts_path, frames);
  const auto groups = store::read_groups(groups_path, bursts);
  const auto m = assoc_method_from_name(method);

  DiscriminationConfig cfg;
  cfg.tau = tau;
  cfg.samples = samples;
  cfg.seed = g.seed;

  double accuracy = 0;
  std::size_t p_meta = 0;
  for (const auto& grp : groups) p_meta = std::max(p_meta, grp.bursts.size());

  if (m == AssocMethod::fsm) {
    if (features_path.empty()) throw ConfigError("baseline: fsm method needs --features");
    const auto features = store::read_features(features_path);
    std::map<std::string, std::size_t> feature_index;
    for (std::size_t i = 0; i < features.size(); ++i)
      feature_index.emplace(features[i].fingerprint_id, i);
    // keep only groups that have a fingerprint, re-pointing events at
    // feature indices so they match the combined matrix
    std::vector<BurstGroup> with_features;
    std::vector<std::size_t> remap;
    for (const auto& grp : groups) {
      const auto it = feature_index.find(grp.pseudo_id);
      if (it == feature_index.end()) continue;
      with_features.push_back(grp);
      remap.push_back(it->second);
    }
    auto events = probe_events(with_features);
    for (auto& e : events) e.fingerprint = remap[e.fingerprint];
    const auto packed = pack_vectors(features);
    const auto combined = combined_matrix(
        pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::euclidean),
        pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::manhattan),
        pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::cosine));
    accuracy = discrimination_accuracy(events, m, cfg, &combined);
  } else {
    const auto events = probe_events(groups);
    accuracy = discrimination_accuracy(events, m, cfg);
  }

  std::ofstream csv(out_path(g, "baseline.csv"), std::ios::trunc);
  csv << "method,p,tau,samples,accuracy,seed\n";
  csv << method << ',' << p_meta << ',' << store::format_double(tau) << ',' << samples << ','
      << store::format_double(accuracy) << ',' << g.seed << '\n';
  std::printf("baseline: method=%s tau=%.0f accuracy=%.4f\n", method.c_str(), tau, accuracy);
}

void cmd_eval(const GlobalOpts& g, const std::string& config_path) {
  auto cfg = ExperimentConfig::load(config_path);
  if (cfg.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (cfg.oui_path.empty()) cfg.oui_path = g.oui_path;
  const auto report = run_sweep(cfg);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(fs::path(cfg.out_dir) / "report.csv", std::ios::trunc);
    out << emit_report(report, ReportFormat::csv);
  }
  std::cout << emit_report(report, ReportFormat::table);
  std::printf("eval: %zu rows -> %s/report.csv\n", report.rows.size(), cfg.out_dir.c_str());
}

void cmd_report(const std::string& in_path, const std::string& format) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw FormatError("cannot open report: " + in_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto report = parse_report_csv(buf.str());
  std::cout << emit_report(report, report_format_from_name(format));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FSM-based Wi-Fi device fingerprinting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Deterministic seed used by every stage");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--oui", g.oui_path, "OUI prefix table (one XX:XX:XX per line)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic trace as pcap");
  std::string profiles_path;
  double duration = 3600;
  synth->add_option("--profiles", profiles_path, "Profile config file")->required();
  synth->add_option("--duration", duration, "Trace duration in seconds")
      ->capture_default_str();
  synth->callback([&] { cmd_synth(g, profiles_path, duration); });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse a pcap into frames.v1");
  std::string pcap_path, capture_id;
  ingest->add_option("--pcap", pcap_path, "Classic pcap file (linktype 105 or 127)")
      ->required();
  ingest->add_option("--capture-id", capture_id, "Capture id (defaults to the file stem)");
  ingest->callback([&] { cmd_ingest(g, pcap_path, capture_id); });

  // sanitize
  auto* san = app.add_subcommand("sanitize", "Pseudonymize MACs, zero SSIDs, rebase time");
  std::string san_frames, salt;
  san->add_option("--frames", san_frames, "frames.v1 input")->required();
  san->add_option("--salt", salt, "Keyed-hash salt")->required();
  san->callback([&] { cmd_sanitize(g, san_frames, salt); });

  // segment
  auto* seg = app.add_subcommand("segment", "Filter clients and segment bursts");
  std::string seg_frames;
  double gap = 1.0;
  seg->add_option("--frames", seg_frames, "frames.v1 input")->required();
  seg->add_option("--gap", gap, "Burst gap threshold in seconds")->capture_default_str();
  seg->callback([&] { cmd_segment(g, seg_frames, gap); });

  // fingerprint
  auto* fp = app.add_subcommand("fingerprint", "Group bursts, build FSMs, extract features");
  std::string fp_frames, fp_bursts, fp_truth;
  std::size_t p = 1;
  bool include_partial = false;
  fp->add_option("--frames", fp_frames, "frames.v1 input")->required();
  fp->add_option("--bursts", fp_bursts, "bursts.v1 input")->required();
  fp->add_option("--p", p, "Bursts aggregated per fingerprint")->capture_default_str();
  fp->add_option("--truth", fp_truth, "Ground-truth csv from synth");
  fp->add_flag("--include-partial", include_partial, "Keep trailing partial groups");
  fp->callback([&] { cmd_fingerprint(g, fp_frames, fp_bursts, p, fp_truth, include_partial); });

  // match
  auto* match = app.add_subcommand("match", "Nearest-neighbor fingerprint matching");
  std::string match_features, metric = "combined", dump_matrix, match_model;
  bool block = false;
  match->add_option("--features", match_features, "features.v1 input")->required();
  match->add_option("--metric", metric, "euclidean|manhattan|cosine|combined")
      ->capture_default_str();
  match->add_flag("--block", block, "Stream the combined matching without the full matrix");
  match->add_option("--dump-matrix", dump_matrix, "Write the distance matrix (binary)");
  match->add_option("--match-with-model", match_model,
                    "Rank candidates by a trained model's score instead of distance");
  match->callback(
      [&] { cmd_match(g, match_features, metric, block, dump_matrix, match_model); });

  // train
  auto* tr = app.add_subcommand("train", "Train a same-device pair classifier");
  std::string tr_features, model = "rf";
  double train_fraction = 0.8;
  tr->add_option("--features", tr_features, "features.v1 input")->required();
  tr->add_option("--model", model, "lr|rf|svm")->capture_default_str();
  tr->add_option("--train-fraction", train_fraction, "Device-level split fraction")
      ->capture_default_str();
  tr->callback([&] { cmd_train(g, tr_features, model, train_fraction); });

  // baseline
  auto* base = app.add_subcommand("baseline", "IE/SEQ discrimination-accuracy baselines");
  std::string b_frames, b_bursts, b_groups, b_features, method = "ie";
  double tau = 600;
  std::size_t samples = 1000;
  base->add_option("--frames", b_frames, "frames.v1 input")->required();
  base->add_option("--bursts", b_bursts, "bursts.v1 input")->required();
  base->add_option("--groups", b_groups, "groups.v1 input")->required();
  base->add_option("--features", b_features, "features.v1 (needed for --method fsm)");
  base->add_option("--method", method, "ie|seq|fsm")->capture_default_str();
  base->add_option("--tau", tau, "Window length in seconds")->capture_default_str();
  base->add_option("--samples", samples, "Sampled targets")->capture_default_str();
  base->callback([&] {
    cmd_baseline(g, b_frames, b_bursts, b_groups, b_features, method, tau, samples);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Run a configured experiment sweep");
  std::string config_path;
  ev->add_option("--config", config_path, "experiment.v1 config file")->required();
  ev->callback([&] { cmd_eval(g, config_path); });

  // report
  auto* rep = app.add_subcommand("report", "Re-emit a report csv in another format");
  std::string report_in, format = "table";
  rep->add_option("--in", report_in, "report.csv produced by eval")->required();
  rep->add_option("--format", format, "csv|table|plotdata")->capture_default_str();
  rep->callback([&] { cmd_report(report_in, format); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  } catch (const Error& e) {
    std::fprintf(stderr, "fsmfp: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fsmfp: %s\n", e.what());
    return static_cast<int>(ExitCode::usage);
  }
  return 0;
}
