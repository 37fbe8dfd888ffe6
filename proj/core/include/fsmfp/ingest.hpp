#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfp/frame.hpp"
#include "fsmfp/mac.hpp"

namespace fsmfp {

/// Counters for everything parse_capture saw but did not materialize.
struct ParseStats {
  std::uint64_t packets = 0;
  std::uint64_t management = 0;
  std::uint64_t non_management = 0;    // control/data frames, dropped
  std::uint64_t malformed = 0;         // truncated or undecodable, skipped
  std::uint64_t unknown_subtype = 0;   // management subtype outside the enum
  std::uint64_t fragments_dropped = 0; // only fragment 0 is kept
};

struct ParseResult {
  std::vector<ManagementFrame> frames;
  ParseStats stats;
};

/// Parses a classic pcap byte stream (magic 0xa1b2c3d4, either byte order;
/// linktype 105 raw 802.11 or 127 radiotap) into management frames, in
/// capture order. Malformed packets are counted and skipped, never fatal.
/// Throws FormatError on an unreadable pcap header and
/// UnsupportedLinktypeError on other link layers.
ParseResult parse_capture(std::span<const std::uint8_t> data, std::string capture_id = "capture");

ParseResult parse_capture_file(const std::string& path, std::string capture_id = "");

/// Replaces every non-broadcast MAC with a keyed-hash pseudonym (stable under
/// one salt; the locally-administered and multicast bits of the original are
/// copied onto the pseudonym), zeroes SSID IE bodies in place, and rebases
/// timestamps so the first frame is t=0. Idempotent under a fixed salt:
/// pseudonyms self-validate, and a frame list whose MACs all validate is
/// passed through unchanged. Throws ConfigError on an empty salt.
std::vector<ManagementFrame> sanitize(std::vector<ManagementFrame> frames, std::string_view salt);

/// Keyed 48-bit pseudonym for one MAC (the primitive behind sanitize).
MacAddress pseudonymize_mac(const MacAddress& mac, std::string_view salt);

/// True iff `mac` is a self-consistent pseudonym under `salt`.
bool is_pseudonym(const MacAddress& mac, std::string_view salt);

/// A MAC is flagged randomized iff its locally-administered bit is set or its
/// OUI prefix is absent from a non-empty table. With an empty table only the
/// U/L bit is consulted. Never inspects octets 3..5.
bool is_randomized_mac(const MacAddress& mac, const OuiTable& oui_table);

}  // namespace fsmfp
