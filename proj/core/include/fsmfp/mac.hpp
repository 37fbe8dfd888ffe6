#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>

namespace fsmfp {

/// 48-bit IEEE MAC address.
struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static MacAddress broadcast() { return {{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }

  /// Parses "aa:bb:cc:dd:ee:ff" (case-insensitive). Returns nullopt on bad input.
  static std::optional<MacAddress> parse(std::string_view text);

  /// Lowercase colon-hex, e.g. "02:1a:2b:3c:4d:5e".
  std::string to_string() const;

  /// Locally-administered bit (0x02 of the first octet); set on randomized MACs.
  bool is_locally_administered() const { return (octets[0] & 0x02) != 0; }

  /// Group bit (0x01 of the first octet).
  bool is_multicast() const { return (octets[0] & 0x01) != 0; }

  bool is_broadcast() const {
    for (auto b : octets)
      if (b != 0xff) return false;
    return true;
  }

  /// First three octets as a 24-bit integer (vendor OUI).
  std::uint32_t oui_prefix() const {
    return (static_cast<std::uint32_t>(octets[0]) << 16) |
           (static_cast<std::uint32_t>(octets[1]) << 8) | octets[2];
  }

  std::uint64_t as_uint64() const {
    std::uint64_t v = 0;
    for (auto b : octets) v = (v << 8) | b;
    return v;
  }

  auto operator<=>(const MacAddress&) const = default;
};

struct MacHash {
  std::size_t operator()(const MacAddress& m) const {
    // splitmix64 finalizer over the 48-bit value
    std::uint64_t z = m.as_uint64() + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return static_cast<std::size_t>(z ^ (z >> 31));
  }
};

using MacSet = std::unordered_set<MacAddress, MacHash>;

/// Known-vendor OUI prefixes loaded from a text file (one XX:XX:XX per line,
/// '#' comments allowed). May be empty, in which case only the U/L bit is
/// consulted by is_randomized_mac.
struct OuiTable {
  std::unordered_set<std::uint32_t> prefixes;

  bool empty() const { return prefixes.empty(); }
  bool contains(const MacAddress& m) const { return prefixes.count(m.oui_prefix()) != 0; }
};

OuiTable load_oui_table(const std::string& path);
OuiTable parse_oui_table(std::string_view text);

}  // namespace fsmfp
