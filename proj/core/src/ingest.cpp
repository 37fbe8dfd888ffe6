#include "fsmfp/ingest.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dot11_layout.hpp"
#include "fsmfp/errors.hpp"

namespace fsmfp {

namespace {

// ---- SipHash-2-4 (keyed 64-bit PRF) for MAC pseudonymization ----

inline std::uint64_t rotl64(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, const std::uint8_t* data,
                        std::size_t len) {
  std::uint64_t v0 = 0x736f6d6570736575ull ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dull ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ull ^ k0;
  std::uint64_t v3 = 0x7465646279746573ull ^ k1;

  auto sipround = [&] {
    v0 += v1;
    v1 = rotl64(v1, 13);
    v1 ^= v0;
    v0 = rotl64(v0, 32);
    v2 += v3;
    v3 = rotl64(v3, 16);
    v3 ^= v2;
    v0 += v3;
    v3 = rotl64(v3, 21);
    v3 ^= v0;
    v2 += v1;
    v1 = rotl64(v1, 17);
    v1 ^= v2;
    v2 = rotl64(v2, 32);
  };

  const std::size_t end = len - (len % 8);
  for (std::size_t i = 0; i < end; i += 8) {
    std::uint64_t m = 0;
    for (int b = 7; b >= 0; --b) m = (m << 8) | data[i + b];
    v3 ^= m;
    sipround();
    sipround();
    v0 ^= m;
  }
  std::uint64_t tail = static_cast<std::uint64_t>(len & 0xff) << 56;
  for (std::size_t i = end; i < len; ++i) tail |= static_cast<std::uint64_t>(data[i]) << (8 * (i - end));
  v3 ^= tail;
  sipround();
  sipround();
  v0 ^= tail;
  v2 ^= 0xff;
  sipround();
  sipround();
  sipround();
  sipround();
  return v0 ^ v1 ^ v2 ^ v3;
}

struct SaltKey {
  std::uint64_t k0, k1;
};

SaltKey derive_key(std::string_view salt) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(salt.data());
  SaltKey key;
  key.k0 = siphash24(0x0706050403020100ull, 0x0f0e0d0c0b0a0908ull, p, salt.size());
  key.k1 = siphash24(~0x0706050403020100ull, ~0x0f0e0d0c0b0a0908ull, p, salt.size());
  return key;
}

// Pseudonym layout: of the 48 MAC bits, the two flag bits (U/L, multicast)
// are copied from the original; the remaining 46 carry a 34-bit keyed digest
// of the original plus a 12-bit keyed check over that digest. The check lets
// sanitize recognize an already-pseudonymized capture and pass it through,
// which makes sanitize idempotent under a fixed salt.

constexpr std::uint64_t kPayloadBits = 34;
constexpr std::uint64_t kCheckBits = 12;

std::uint64_t check_of(const SaltKey& key, std::uint64_t payload) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(payload >> (8 * i));
  return siphash24(key.k0 ^ 0xa5a5a5a5a5a5a5a5ull, key.k1 ^ 0x5a5a5a5a5a5a5a5aull, buf, 8) &
         ((1ull << kCheckBits) - 1);
}

MacAddress mac_from_bits(std::uint64_t v46, std::uint8_t flag_bits) {
  // v46 occupies the 46 non-flag bits: the high 6 bits go into octet 0.
  MacAddress out;
  out.octets[0] = static_cast<std::uint8_t>(((v46 >> 40) & 0x3f) << 2) | flag_bits;
  for (int i = 1; i < 6; ++i)
    out.octets[i] = static_cast<std::uint8_t>(v46 >> (8 * (5 - i)));
  return out;
}

std::uint64_t bits_of_mac(const MacAddress& m) {
  std::uint64_t v = (static_cast<std::uint64_t>(m.octets[0] >> 2) & 0x3f) << 40;
  for (int i = 1; i < 6; ++i) v |= static_cast<std::uint64_t>(m.octets[i]) << (8 * (5 - i));
  return v;
}

MacAddress pseudonymize_with(const SaltKey& key, const MacAddress& mac) {
  const std::uint64_t digest =
      siphash24(key.k0, key.k1, mac.octets.data(), mac.octets.size());
  const std::uint64_t payload = digest & ((1ull << kPayloadBits) - 1);
  const std::uint64_t v46 = (payload << kCheckBits) | check_of(key, payload);
  const std::uint8_t flags = mac.octets[0] & 0x03;
  return mac_from_bits(v46, flags);
}

bool is_pseudonym_with(const SaltKey& key, const MacAddress& mac) {
  const std::uint64_t v46 = bits_of_mac(mac);
  const std::uint64_t payload = v46 >> kCheckBits;
  return (v46 & ((1ull << kCheckBits) - 1)) == check_of(key, payload);
}

// ---- pcap decoding helpers ----

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, bool swapped)
      : data_(data), swapped_(swapped) {}

  std::size_t remaining(std::size_t pos) const { return pos <= data_.size() ? data_.size() - pos : 0; }

  std::uint32_t u32(std::size_t pos) const {  // pcap field order (file endianness)
    std::uint32_t v = static_cast<std::uint32_t>(data_[pos]) |
                      (static_cast<std::uint32_t>(data_[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(data_[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(data_[pos + 3]) << 24);
    if (swapped_) v = __builtin_bswap32(v);
    return v;
  }
  const std::uint8_t* at(std::size_t pos) const { return data_.data() + pos; }

 private:
  std::span<const std::uint8_t> data_;
  bool swapped_;
};

MacAddress mac_at(const std::uint8_t* p) {
  MacAddress m;
  std::memcpy(m.octets.data(), p, 6);
  return m;
}

std::vector<InformationElement> parse_ies(const std::uint8_t* body, std::size_t len) {
  std::vector<InformationElement> ies;
  std::size_t pos = 0;
  while (pos + 2 <= len) {
    const std::uint8_t tag = body[pos];
    const std::uint8_t ie_len = body[pos + 1];
    pos += 2;
    if (pos + ie_len > len) break;  // truncated trailing IE: keep what we have
    ies.push_back({tag, std::vector<std::uint8_t>(body + pos, body + pos + ie_len)});
    pos += ie_len;
  }
  return ies;
}

}  // namespace

ParseResult parse_capture(std::span<const std::uint8_t> data, std::string capture_id) {
  if (data.size() < 24) throw FormatError("truncated pcap header");

  const std::uint32_t magic_le = static_cast<std::uint32_t>(data[0]) |
                                 (static_cast<std::uint32_t>(data[1]) << 8) |
                                 (static_cast<std::uint32_t>(data[2]) << 16) |
                                 (static_cast<std::uint32_t>(data[3]) << 24);
  bool swapped;
  if (magic_le == dot11::kPcapMagicUsec) {
    swapped = false;
  } else if (__builtin_bswap32(magic_le) == dot11::kPcapMagicUsec) {
    swapped = true;
  } else {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic_le);
    throw FormatError(std::string("unrecognized pcap magic ") + buf);
  }

  ByteReader rd(data, swapped);
  const std::uint32_t linktype = rd.u32(20);
  if (linktype != dot11::kLinktypeIeee80211 && linktype != dot11::kLinktypeRadiotap)
    throw UnsupportedLinktypeError(linktype);

  ParseResult result;
  std::size_t pos = 24;
  while (rd.remaining(pos) >= 16) {
    const std::uint32_t ts_sec = rd.u32(pos);
    const std::uint32_t ts_usec = rd.u32(pos + 4);
    const std::uint32_t incl_len = rd.u32(pos + 8);
    pos += 16;
    if (incl_len > rd.remaining(pos)) {  // truncated capture tail
      result.stats.malformed++;
      pos = data.size();
      break;
    }
    const std::uint8_t* pkt = rd.at(pos);
    std::size_t len = incl_len;
    pos += incl_len;
    result.stats.packets++;

    if (linktype == dot11::kLinktypeRadiotap) {
      // radiotap: u8 version(0), u8 pad, u16le header length
      if (len < 4 || pkt[0] != 0) {
        result.stats.malformed++;
        continue;
      }
      const std::uint16_t rt_len = static_cast<std::uint16_t>(pkt[2] | (pkt[3] << 8));
      if (rt_len > len) {
        result.stats.malformed++;
        continue;
      }
      pkt += rt_len;
      len -= rt_len;
    }

    if (len < dot11::kMgmtHeaderLen) {
      result.stats.malformed++;
      continue;
    }
    const std::uint16_t fc = static_cast<std::uint16_t>(pkt[0] | (pkt[1] << 8));
    if ((fc & 0x03) != 0) {  // protocol version
      result.stats.malformed++;
      continue;
    }
    const unsigned type = (fc >> 2) & 0x03;
    if (type != 0) {
      result.stats.non_management++;
      continue;
    }
    const unsigned subtype_code = (fc >> 4) & 0x0f;
    const auto subtype = subtype_from_code(subtype_code);
    if (!subtype) {
      result.stats.unknown_subtype++;
      continue;
    }
    ManagementFrame frame;
    frame.timestamp = static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6;
    frame.dst = mac_at(pkt + 4);
    frame.src = mac_at(pkt + 10);
    frame.subtype = *subtype;
    const std::uint16_t sc = static_cast<std::uint16_t>(pkt[22] | (pkt[23] << 8));
    if ((sc & 0x0f) != 0) {  // only fragment 0 is kept
      result.stats.fragments_dropped++;
      continue;
    }
    frame.seq_num = static_cast<std::uint16_t>(sc >> 4);
    frame.capture_id = capture_id;

    if (subtype_carries_ies(*subtype)) {
      const std::size_t fixed = dot11::fixed_params_len(*subtype);
      const std::size_t body_off = dot11::kMgmtHeaderLen + fixed;
      if (len > body_off) frame.ies = parse_ies(pkt + body_off, len - body_off);
    }
    result.stats.management++;
    result.frames.push_back(std::move(frame));
  }
  if (rd.remaining(pos) > 0) result.stats.malformed++;  // trailing partial record header
  return result;
}

ParseResult parse_capture_file(const std::string& path, std::string capture_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open pcap file: " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (capture_id.empty()) capture_id = std::filesystem::path(path).stem().string();
  return parse_capture(data, std::move(capture_id));
}

MacAddress pseudonymize_mac(const MacAddress& mac, std::string_view salt) {
  if (salt.empty()) throw ConfigError("sanitize: empty salt");
  return pseudonymize_with(derive_key(salt), mac);
}

bool is_pseudonym(const MacAddress& mac, std::string_view salt) {
  if (salt.empty()) throw ConfigError("sanitize: empty salt");
  return is_pseudonym_with(derive_key(salt), mac);
}

std::vector<ManagementFrame> sanitize(std::vector<ManagementFrame> frames,
                                      std::string_view salt) {
  if (salt.empty()) throw ConfigError("sanitize: empty salt");
  if (frames.empty()) return frames;
  const SaltKey key = derive_key(salt);

  // A capture whose non-broadcast MACs all self-validate was already
  // sanitized under this salt; re-hashing would break idempotence.
  bool already_sanitized = true;
  for (const auto& f : frames) {
    if (!f.src.is_broadcast() && !is_pseudonym_with(key, f.src)) already_sanitized = false;
    if (!f.dst.is_broadcast() && !is_pseudonym_with(key, f.dst)) already_sanitized = false;
    if (!already_sanitized) break;
  }

  const double t0 = frames.front().timestamp;
  for (auto& f : frames) {
    if (!already_sanitized) {
      if (!f.src.is_broadcast()) f.src = pseudonymize_with(key, f.src);
      if (!f.dst.is_broadcast()) f.dst = pseudonymize_with(key, f.dst);
    }
    for (auto& ie : f.ies) {
      if (ie.tag == 0) std::fill(ie.body.begin(), ie.body.end(), std::uint8_t{0});
    }
    f.timestamp -= t0;
  }
  return frames;
}

bool is_randomized_mac(const MacAddress& mac, const OuiTable& oui_table) {
  if (mac.is_locally_administered()) return true;
  if (oui_table.empty()) return false;  // only the U/L bit is consulted
  return !oui_table.contains(mac);
}

}  // namespace fsmfp
