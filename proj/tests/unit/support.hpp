#pragma once

// Shared helpers for the unit suites.

#include <string>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/frame.hpp"
#include "fsmfp/synthgen.hpp"

namespace testsupport {

inline fsmfp::MacAddress mac(const char* text) {
  auto m = fsmfp::MacAddress::parse(text);
  REQUIRE(m.has_value());
  return *m;
}

inline fsmfp::ManagementFrame frame(double t, const char* src,
                                    fsmfp::FrameSubtype subtype = fsmfp::FrameSubtype::ProbeRequest,
                                    const char* dst = "ff:ff:ff:ff:ff:ff",
                                    std::uint16_t seq = 0, const char* cap = "test") {
  fsmfp::ManagementFrame f;
  f.timestamp = t;
  f.src = mac(src);
  f.dst = mac(dst);
  f.subtype = subtype;
  f.seq_num = seq;
  f.capture_id = cap;
  return f;
}

inline fsmfp::Burst burst_of(std::vector<fsmfp::ManagementFrame> frames,
                             std::size_t index_within_mac = 0) {
  REQUIRE(!frames.empty());
  fsmfp::Burst b;
  b.mac = frames.front().src;
  b.capture_id = frames.front().capture_id;
  b.start_time = frames.front().timestamp;
  b.end_time = frames.back().timestamp;
  b.index_within_mac = index_within_mac;
  b.frames = std::move(frames);
  return b;
}

inline fsmfp::BurstGroup group_of(std::vector<fsmfp::Burst> bursts,
                                  const std::string& device = "dev-a",
                                  const std::string& id = "fp-000000") {
  fsmfp::BurstGroup g;
  g.pseudo_id = id;
  g.device_id = device;
  g.bursts = std::move(bursts);
  return g;
}

// Two-state probing profile usable as a base for most generator tests.
inline fsmfp::VendorProfile probe_profile(const std::string& name) {
  using namespace fsmfp;
  VendorProfile p;
  p.name = name;
  p.states = {FsmState{FrameSubtype::ProbeRequest, DstClass::Broadcast},
              FsmState{FrameSubtype::Authentication, DstClass::Unicast}};
  p.transition_probs = {{0.8, 0.2}, {0.5, 0.5}};
  p.initial_state = p.states[0];
  p.frames_per_burst = Dist::uniform(3, 8);
  p.intra_gap = Dist::uniform(0.01, 0.2);
  p.inter_gap = Dist::uniform(2.0, 10.0);
  p.bursts_per_device = Dist::constant(10);
  p.seq_increment = Dist::uniform(1, 3);
  p.ie_tags = {{0, 1.0}, {1, 1.0}, {50, 0.8}, {221, 0.6}};
  p.mac_policy = MacPolicy::persistent;
  return p;
}

inline fsmfp::VendorProfile ap_profile(const std::string& name) {
  using namespace fsmfp;
  VendorProfile p;
  p.name = name;
  p.states = {FsmState{FrameSubtype::Beacon, DstClass::Broadcast},
              FsmState{FrameSubtype::ProbeResponse, DstClass::Unicast},
              FsmState{FrameSubtype::AssociationResponse, DstClass::Unicast}};
  p.transition_probs = {{0.8, 0.15, 0.05}, {0.6, 0.3, 0.1}, {0.7, 0.2, 0.1}};
  p.initial_state = p.states[0];
  p.frames_per_burst = Dist::uniform(2, 5);
  p.intra_gap = Dist::uniform(0.05, 0.5);
  p.inter_gap = Dist::uniform(1.5, 4.0);
  p.bursts_per_device = Dist::constant(5);
  p.seq_increment = Dist::constant(1);
  p.mac_policy = MacPolicy::persistent;
  p.is_ap = true;
  return p;
}

}  // namespace testsupport
