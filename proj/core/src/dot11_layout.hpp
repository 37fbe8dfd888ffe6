#pragma once

// Internal byte-layout constants shared by the pcap reader (ingest) and
// writer (synthgen). Not installed.

#include <cstddef>
#include <cstdint>

#include "fsmfp/frame.hpp"

namespace fsmfp::dot11 {

inline constexpr std::uint32_t kPcapMagicUsec = 0xa1b2c3d4u;
inline constexpr std::uint32_t kLinktypeIeee80211 = 105;
inline constexpr std::uint32_t kLinktypeRadiotap = 127;
inline constexpr std::size_t kMgmtHeaderLen = 24;  // fc, dur, addr1-3, seq ctl

// Fixed (non-IE) parameter bytes between the 802.11 header and the first IE.
inline std::size_t fixed_params_len(FrameSubtype s) {
  switch (s) {
    case FrameSubtype::ProbeRequest: return 0;
    case FrameSubtype::ProbeResponse: return 12;  // timestamp, interval, capability
    case FrameSubtype::Beacon: return 12;
    case FrameSubtype::AssociationRequest: return 4;   // capability, listen interval
    case FrameSubtype::AssociationResponse: return 6;  // capability, status, AID
    case FrameSubtype::ReassociationRequest: return 10;
    case FrameSubtype::ReassociationResponse: return 6;
    case FrameSubtype::Authentication: return 6;
    case FrameSubtype::Deauthentication: return 2;
    case FrameSubtype::Disassociation: return 2;
    case FrameSubtype::Action: return 0;
  }
  return 0;
}

}  // namespace fsmfp::dot11
