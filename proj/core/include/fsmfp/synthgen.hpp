#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/frame.hpp"
#include "fsmfp/fsm.hpp"

namespace fsmfp {

/// Scalar sampling distribution: constant v | uniform lo hi | truncexp mean lo hi
/// (exponential with the given mean shifted to lo and truncated at hi,
/// inverse-CDF sampled so no probability mass piles up at the bounds).
struct Dist {
  enum class Kind { constant, uniform, truncexp } kind = Kind::constant;
  double a = 0, b = 0, c = 0;

  static Dist constant(double v) { return {Kind::constant, v, 0, 0}; }
  static Dist uniform(double lo, double hi) { return {Kind::uniform, lo, hi, 0}; }
  static Dist truncexp(double mean, double lo, double hi) { return {Kind::truncexp, mean, lo, hi}; }

  double sample(std::mt19937_64& rng) const;
  long sample_int(std::mt19937_64& rng) const;  // rounded, clamped to support
  double min_support() const;
  double max_support() const;

  static Dist parse(std::string_view text);  // throws ConfigError
  std::string to_string() const;
};

enum class MacPolicy { persistent, rotate_per_burst, rotate_per_k };

/// Generative behavioral model for one vendor. Each device instantiated from
/// a profile derives stable per-device parameters; device_jitter in [0,1)
/// controls how far those drift from the profile (0 = exact clones).
struct VendorProfile {
  std::string name;
  std::vector<FsmState> states;
  std::vector<std::vector<double>> transition_probs;  // row-stochastic over `states`
  FsmState initial_state{};
  Dist frames_per_burst = Dist::constant(4);
  Dist intra_gap = Dist::constant(0.1);    // support must lie in (0, 1]
  Dist inter_gap = Dist::constant(10.0);   // support must lie in (1, inf)
  Dist bursts_per_device = Dist::constant(10);
  Dist seq_increment = Dist::constant(1);  // positive integers
  // (tag, inclusion probability): each device carries the tag with the given
  // probability, decided once per device; its probes then always emit it
  std::vector<std::pair<int, double>> ie_tags;
  MacPolicy mac_policy = MacPolicy::persistent;
  int rotate_k = 1;
  bool is_ap = false;
  double device_jitter = 0.0;
  std::uint32_t oui = 0;  // vendor prefix for persistent MACs; 0 = random

  void validate() const;  // throws ConfigError on any broken invariant
};

struct GroundTruth {
  std::vector<std::string> frame_device;           // device id per frame ordinal
  std::map<std::string, std::string> device_profile;  // device id -> profile name
};

struct TraceResult {
  std::vector<ManagementFrame> frames;  // time-sorted
  GroundTruth truth;
};

/// Generates a labeled synthetic trace: per device, sampled bursts walking
/// the profile's state chain, cumulative sequence numbers mod 4096, IEs on
/// probe requests, MAC rotation per policy (rotated MACs carry the
/// locally-administered bit). Fully deterministic per seed.
TraceResult generate_trace(std::span<const std::pair<VendorProfile, std::size_t>> profiles,
                           double duration, std::uint64_t seed);

/// Serializes frames as classic pcap, linktype 105, microsecond ticks
/// (floor). Inverse of parse_capture on this frame model.
std::vector<std::uint8_t> write_capture(std::span<const ManagementFrame> frames);
void write_capture_file(const std::string& path, std::span<const ManagementFrame> frames);

/// Profile configuration file ("profiles.v1" header; see profiles/ for the
/// format). Returns (profile, device_count) entries in file order.
std::vector<std::pair<VendorProfile, std::size_t>> load_profiles(const std::string& path);
std::vector<std::pair<VendorProfile, std::size_t>> parse_profiles(std::string_view text);

/// Ground truth CSV: frame ordinal, device id, profile name.
void write_truth_csv(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth_csv(const std::string& path);

/// Source MAC -> device id over generated frames (each generated MAC belongs
/// to exactly one device).
DeviceMap device_map_from_truth(std::span<const ManagementFrame> frames,
                                const GroundTruth& truth);

}  // namespace fsmfp
