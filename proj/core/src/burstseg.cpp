#include "fsmfp/burstseg.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "fsmfp/errors.hpp"

namespace fsmfp {

FilterResult filter_clients(const std::vector<ManagementFrame>& frames) {
  FilterResult result;
  for (const auto& f : frames) {
    if (f.subtype == FrameSubtype::Beacon || f.subtype == FrameSubtype::AssociationResponse)
      result.excluded_macs.insert(f.src);
  }
  result.client_frames.reserve(frames.size());
  for (const auto& f : frames) {
    if (!result.excluded_macs.count(f.src)) result.client_frames.push_back(f);
  }
  return result;
}

std::vector<Burst> segment_bursts(const std::vector<ManagementFrame>& frames, double gap) {
  if (gap <= 0) throw ConfigError("segment_bursts: gap must be > 0");

  // stable sort by timestamp, ties broken by input order
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].timestamp < frames[b].timestamp;
  });

  // bursts are keyed by (capture, mac); they never span captures
  std::map<std::pair<std::string, MacAddress>, std::vector<Burst>> per_key;
  for (std::size_t idx : order) {
    const auto& f = frames[idx];
    auto& bursts = per_key[{f.capture_id, f.src}];
    const bool fresh =
        bursts.empty() || f.timestamp - bursts.back().end_time > gap;
    if (fresh) {
      Burst b;
      b.mac = f.src;
      b.capture_id = f.capture_id;
      b.start_time = f.timestamp;
      b.index_within_mac = bursts.size();
      bursts.push_back(std::move(b));
    }
    Burst& b = bursts.back();
    b.frames.push_back(f);
    b.ordinals.push_back(idx);
    b.end_time = f.timestamp;
  }

  std::vector<Burst> out;
  for (auto& [key, bursts] : per_key)
    for (auto& b : bursts) out.push_back(std::move(b));
  std::sort(out.begin(), out.end(), [](const Burst& a, const Burst& b) {
    if (a.start_time != b.start_time) return a.start_time < b.start_time;
    if (a.mac != b.mac) return a.mac < b.mac;
    return a.capture_id < b.capture_id;
  });
  return out;
}

std::vector<BurstGroup> group_bursts(const std::vector<Burst>& bursts, std::size_t p,
                                     const DeviceMap& device_map) {
  if (p < 1) throw ConfigError("group_bursts: P must be >= 1");

  // chunk key: the device when known, otherwise the (capture, mac) pair so
  // unlabeled bursts never mix across identifiers
  std::map<std::pair<std::string, std::string>, std::vector<const Burst*>> chains;
  for (const auto& b : bursts) {
    const auto it = device_map.find(b.mac);
    const std::string device = it == device_map.end() ? kUnknownDevice : it->second;
    std::string chain_key = device_known(device)
                                ? "dev:" + device + "|" + b.capture_id
                                : "mac:" + b.capture_id + "|" + b.mac.to_string();
    chains[{chain_key, device}].push_back(&b);
  }

  for (auto& [key, chain] : chains) {
    std::sort(chain.begin(), chain.end(), [](const Burst* a, const Burst* b) {
      if (a->start_time != b->start_time) return a->start_time < b->start_time;
      return a->index_within_mac < b->index_within_mac;
    });
  }

  std::vector<BurstGroup> groups;
  std::size_t counter = 0;
  for (const auto& [key, chain] : chains) {
    const std::string& device = key.second;
    for (std::size_t start = 0; start < chain.size();) {
      const std::size_t take = p == kGroupAll ? chain.size() : std::min(p, chain.size() - start);
      BurstGroup g;
      char id[24];
      std::snprintf(id, sizeof(id), "fp-%06zu", counter++);
      g.pseudo_id = id;
      g.device_id = device;
      g.partial = p != kGroupAll && take < p;
      g.bursts.reserve(take);
      for (std::size_t k = 0; k < take; ++k) g.bursts.push_back(*chain[start + k]);
      groups.push_back(std::move(g));
      start += take;
    }
  }
  return groups;
}

}  // namespace fsmfp
