#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsmfp/frame.hpp"
#include "fsmfp/mac.hpp"

namespace fsmfp {

/// Device id assigned to bursts whose origin device is not known (randomized
/// MACs without ground truth). Never compares equal to itself for matching
/// purposes; evaluation skips these fingerprints.
inline constexpr const char* kUnknownDevice = "unknown";

inline bool device_known(const std::string& id) { return !id.empty() && id != kUnknownDevice; }

/// Maximal same-MAC frame run with inter-packet gaps <= the segmentation
/// threshold. Keyed by (capture_id, mac); bursts never span captures.
struct Burst {
  MacAddress mac;
  std::string capture_id;
  std::vector<ManagementFrame> frames;
  std::vector<std::size_t> ordinals;  // indices into the source frame list
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t index_within_mac = 0;
};

struct FilterResult {
  std::vector<ManagementFrame> client_frames;
  MacSet excluded_macs;
};

/// Excludes every MAC that ever sourced a Beacon or AssociationResponse
/// (those are access points) and drops all frames from such MACs.
FilterResult filter_clients(const std::vector<ManagementFrame>& frames);

/// Partitions each (capture, MAC) frame stream into maximal runs whose
/// consecutive timestamps differ by <= gap (boundary inclusive: a gap of
/// exactly `gap` stays inside the burst). Output is sorted by
/// (start_time, mac, capture). Throws ConfigError when gap <= 0.
std::vector<Burst> segment_bursts(const std::vector<ManagementFrame>& frames, double gap = 1.0);

/// Sentinel for group_bursts: one group per device holding all its bursts.
inline constexpr std::size_t kGroupAll = std::numeric_limits<std::size_t>::max();

/// P consecutive bursts of one device under one fresh pseudo identifier;
/// simulates identifier rotation at group boundaries.
struct BurstGroup {
  std::string pseudo_id;
  std::string device_id;
  bool partial = false;  // trailing remainder group of size < P
  std::vector<Burst> bursts;

  std::size_t frame_count() const {
    std::size_t n = 0;
    for (const auto& b : bursts) n += b.frames.size();
    return n;
  }
};

using DeviceMap = std::unordered_map<MacAddress, std::string, MacHash>;

/// Chunks each device's bursts (time order) into groups of exactly P, plus a
/// trailing partial group. Bursts whose MAC is missing from device_map are
/// grouped per (capture, MAC) and labeled kUnknownDevice. pseudo_ids are
/// fresh and globally unique within the returned list. Throws ConfigError
/// when p < 1.
std::vector<BurstGroup> group_bursts(const std::vector<Burst>& bursts, std::size_t p,
                                     const DeviceMap& device_map);

}  // namespace fsmfp
