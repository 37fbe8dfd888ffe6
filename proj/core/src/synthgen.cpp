#include "fsmfp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dot11_layout.hpp"
#include "fsmfp/errors.hpp"
#include "fsmfp/rand.hpp"

namespace fsmfp {

// ---- distributions ----

double Dist::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::uniform:
      return uniform_double(rng, a, b);
    case Kind::truncexp: {
      // inverse CDF of an exponential with mean `a`, shifted to lo=b and
      // truncated at hi=c
      const double span = c - b;
      if (span <= 0) return b;
      const double u = canonical_double(rng);
      const double cap = 1.0 - std::exp(-span / a);
      return b - a * std::log(1.0 - u * cap);
    }
  }
  return a;
}

long Dist::sample_int(std::mt19937_64& rng) const {
  const double lo = std::ceil(min_support());
  const double hi = std::floor(max_support());
  double v = std::round(sample(rng));
  if (v < lo) v = lo;
  if (v > hi) v = hi;
  return static_cast<long>(v);
}

double Dist::min_support() const {
  switch (kind) {
    case Kind::constant: return a;
    case Kind::uniform: return a;
    case Kind::truncexp: return b;
  }
  return a;
}

double Dist::max_support() const {
  switch (kind) {
    case Kind::constant: return a;
    case Kind::uniform: return b;
    case Kind::truncexp: return c;
  }
  return a;
}

Dist Dist::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  in >> kind;
  double a = 0, b = 0, c = 0;
  if (kind == "constant") {
    if (!(in >> a)) throw ConfigError("dist: constant needs one value");
    return constant(a);
  }
  if (kind == "uniform") {
    if (!(in >> a >> b) || b < a) throw ConfigError("dist: uniform needs lo <= hi");
    return uniform(a, b);
  }
  if (kind == "truncexp") {
    if (!(in >> a >> b >> c) || a <= 0 || c < b)
      throw ConfigError("dist: truncexp needs mean > 0, lo <= hi");
    return truncexp(a, b, c);
  }
  throw ConfigError("dist: unknown kind '" + kind + "'");
}

std::string Dist::to_string() const {
  char buf[96];
  switch (kind) {
    case Kind::constant:
      std::snprintf(buf, sizeof(buf), "constant %.9g", a);
      break;
    case Kind::uniform:
      std::snprintf(buf, sizeof(buf), "uniform %.9g %.9g", a, b);
      break;
    case Kind::truncexp:
      std::snprintf(buf, sizeof(buf), "truncexp %.9g %.9g %.9g", a, b, c);
      break;
  }
  return buf;
}

// ---- profiles ----

void VendorProfile::validate() const {
  if (name.empty()) throw ConfigError("profile: empty name");
  if (states.empty()) throw ConfigError("profile " + name + ": no states");
  if (transition_probs.size() != states.size())
    throw ConfigError("profile " + name + ": need one transition row per state");
  for (std::size_t i = 0; i < transition_probs.size(); ++i) {
    const auto& row = transition_probs[i];
    if (row.size() != states.size())
      throw ConfigError("profile " + name + ": row " + std::to_string(i) + " has wrong width");
    double sum = 0;
    for (double p : row) {
      if (p < 0) throw ConfigError("profile " + name + ": negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("profile " + name + ": row " + std::to_string(i) +
                        " sums to " + std::to_string(sum) + ", expected 1");
  }
  if (std::find(states.begin(), states.end(), initial_state) == states.end())
    throw ConfigError("profile " + name + ": initial state not in state set");
  if (intra_gap.min_support() <= 0 || intra_gap.max_support() > 1.0)
    throw ConfigError("profile " + name + ": intra_gap support must lie in (0, 1]");
  if (inter_gap.min_support() <= 1.0)
    throw ConfigError("profile " + name + ": inter_gap support must lie in (1, inf)");
  if (frames_per_burst.max_support() < 1)
    throw ConfigError("profile " + name + ": frames_per_burst must reach >= 1");
  if (seq_increment.min_support() < 1)
    throw ConfigError("profile " + name + ": seq_increment must be positive");
  if (device_jitter < 0 || device_jitter >= 1)
    throw ConfigError("profile " + name + ": device_jitter must lie in [0, 1)");
  if (mac_policy == MacPolicy::rotate_per_k && rotate_k < 1)
    throw ConfigError("profile " + name + ": rotate_per_k needs k >= 1");
  for (const auto& [tag, prob] : ie_tags) {
    if (tag < 0 || tag > 255) throw ConfigError("profile " + name + ": ie tag out of 0..255");
    if (prob < 0 || prob > 1) throw ConfigError("profile " + name + ": ie probability out of [0,1]");
  }
}

namespace {

// Stable per-device behavior derived from a profile; device_jitter controls
// how far it drifts. IE inclusion is decided once per device (a device's
// firmware emits a fixed tag set; the profile probability is the fraction of
// the vendor's devices carrying the tag).
struct DeviceBehavior {
  std::vector<std::vector<double>> rows;
  std::size_t initial_index = 0;
  Dist frames_per_burst, intra_gap, inter_gap, seq_increment;
  std::vector<int> ie_tags;
};

Dist scale_dist(const Dist& d, double factor, double lo_clamp, double hi_clamp) {
  Dist out = d;
  auto clamp = [&](double v) { return std::min(std::max(v * factor, lo_clamp), hi_clamp); };
  switch (d.kind) {
    case Dist::Kind::constant:
      out.a = clamp(d.a);
      break;
    case Dist::Kind::uniform:
      out.a = clamp(d.a);
      out.b = std::max(clamp(d.b), out.a);
      break;
    case Dist::Kind::truncexp:
      out.a = std::max(d.a * factor, 1e-9);
      out.b = clamp(d.b);
      out.c = std::max(clamp(d.c), out.b);
      break;
  }
  return out;
}

DeviceBehavior instantiate_device(const VendorProfile& p, std::mt19937_64& rng) {
  DeviceBehavior b;
  const double j = p.device_jitter;
  const std::size_t n = p.states.size();

  b.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // mix the profile row with a device-specific random stochastic row
    std::vector<double> noise(n);
    double sum = 0;
    for (auto& v : noise) {
      v = -std::log(1.0 - canonical_double(rng));
      sum += v;
    }
    b.rows[i].resize(n);
    double row_sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
      b.rows[i][k] = (1.0 - j) * p.transition_probs[i][k] + j * (noise[k] / sum);
      row_sum += b.rows[i][k];
    }
    for (auto& v : b.rows[i]) v /= row_sum;
  }

  b.initial_index = static_cast<std::size_t>(
      std::find(p.states.begin(), p.states.end(), p.initial_state) - p.states.begin());

  auto factor = [&] { return std::exp(j * uniform_double(rng, -0.7, 0.7)); };
  b.frames_per_burst = scale_dist(p.frames_per_burst, factor(), 1.0, 1e6);
  b.intra_gap = scale_dist(p.intra_gap, factor(), 1e-4, 1.0);
  b.inter_gap = scale_dist(p.inter_gap, factor(), 1.0 + 1e-6, 1e9);
  b.seq_increment = scale_dist(p.seq_increment, factor(), 1.0, 4095.0);

  auto tags = p.ie_tags;
  std::sort(tags.begin(), tags.end());
  for (const auto& [tag, prob] : tags) {
    if (canonical_double(rng) < prob) b.ie_tags.push_back(tag);
  }
  return b;
}

MacAddress random_mac(std::mt19937_64& rng, bool randomized, std::uint32_t oui) {
  MacAddress m;
  for (auto& o : m.octets) o = static_cast<std::uint8_t>(bounded_uint(rng, 256));
  if (randomized) {
    m.octets[0] |= 0x02;   // locally administered
    m.octets[0] &= ~0x01;  // unicast source
  } else {
    if (oui != 0) {
      m.octets[0] = static_cast<std::uint8_t>(oui >> 16);
      m.octets[1] = static_cast<std::uint8_t>(oui >> 8);
      m.octets[2] = static_cast<std::uint8_t>(oui);
    }
    m.octets[0] &= ~0x03;  // globally administered, unicast
  }
  return m;
}

std::size_t sample_next_state(const std::vector<double>& row, std::mt19937_64& rng) {
  const double u = canonical_double(rng);
  double acc = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    acc += row[k];
    if (u < acc) return k;
  }
  return row.size() - 1;
}

struct PendingFrame {
  ManagementFrame frame;
  std::size_t device = 0;
};

}  // namespace

TraceResult generate_trace(std::span<const std::pair<VendorProfile, std::size_t>> profiles,
                           double duration, std::uint64_t seed) {
  if (profiles.empty()) throw ConfigError("generate_trace: no profiles");
  if (duration <= 0) throw ConfigError("generate_trace: duration must be > 0");
  for (const auto& [p, count] : profiles) p.validate();

  std::vector<PendingFrame> pending;
  TraceResult out;
  std::size_t device_index = 0;

  for (const auto& [profile, count] : profiles) {
    for (std::size_t d = 0; d < count; ++d, ++device_index) {
      std::mt19937_64 rng(derive_seed(seed, device_index));
      const DeviceBehavior behavior = instantiate_device(profile, rng);

      char dev_name[24];
      std::snprintf(dev_name, sizeof(dev_name), "dev-%04zu", device_index);
      out.truth.device_profile[dev_name] = profile.name;

      const MacAddress persistent = random_mac(rng, false, profile.oui);
      const MacAddress peer = random_mac(rng, false, 0);
      MacAddress current = persistent;
      if (profile.mac_policy != MacPolicy::persistent) current = random_mac(rng, true, 0);

      std::uint16_t seq = static_cast<std::uint16_t>(bounded_uint(rng, 4096));
      const long bursts = std::max<long>(1, profile.bursts_per_device.sample_int(rng));

      const double offset_window =
          std::min(duration, std::max(1.0, behavior.inter_gap.max_support()));
      double t = uniform_double(rng, 0.0, offset_window);

      for (long br = 0; br < bursts; ++br) {
        if (br > 0) {
          switch (profile.mac_policy) {
            case MacPolicy::persistent:
              break;
            case MacPolicy::rotate_per_burst:
              current = random_mac(rng, true, 0);
              break;
            case MacPolicy::rotate_per_k:
              if (br % profile.rotate_k == 0) current = random_mac(rng, true, 0);
              break;
          }
        }
        if (t > duration) break;

        const long frames_n = std::max<long>(1, behavior.frames_per_burst.sample_int(rng));
        std::size_t state = behavior.initial_index;
        for (long fi = 0; fi < frames_n; ++fi) {
          if (fi > 0) {
            t += behavior.intra_gap.sample(rng);
            state = sample_next_state(behavior.rows[state], rng);
          }
          const FsmState& st = profile.states[state];
          ManagementFrame f;
          f.timestamp = t;
          f.src = current;
          f.dst = st.dst == DstClass::Broadcast ? MacAddress::broadcast() : peer;
          f.subtype = st.subtype;
          f.seq_num = seq;
          seq = static_cast<std::uint16_t>(
              (seq + behavior.seq_increment.sample_int(rng)) & 0x0fff);
          f.capture_id = "synth";
          if (st.subtype == FrameSubtype::ProbeRequest) {
            for (const int tag : behavior.ie_tags) {
              InformationElement ie;
              ie.tag = static_cast<std::uint8_t>(tag);
              const std::size_t body_len = 1 + bounded_uint(rng, 3);
              ie.body.resize(body_len);
              for (auto& byte : ie.body) byte = static_cast<std::uint8_t>(bounded_uint(rng, 256));
              f.ies.push_back(std::move(ie));
            }
          }
          pending.push_back({std::move(f), device_index});
        }
        t += behavior.inter_gap.sample(rng);
      }
    }
  }

  std::stable_sort(pending.begin(), pending.end(),
                   [](const PendingFrame& a, const PendingFrame& b) {
                     return a.frame.timestamp < b.frame.timestamp;
                   });

  out.frames.reserve(pending.size());
  out.truth.frame_device.reserve(pending.size());
  for (auto& p : pending) {
    char dev_name[24];
    std::snprintf(dev_name, sizeof(dev_name), "dev-%04zu", p.device);
    out.frames.push_back(std::move(p.frame));
    out.truth.frame_device.emplace_back(dev_name);
  }
  return out;
}

// ---- pcap writer ----

namespace {

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

}  // namespace

std::vector<std::uint8_t> write_capture(std::span<const ManagementFrame> frames) {
  std::vector<std::uint8_t> out;
  put_u32le(out, dot11::kPcapMagicUsec);
  put_u16le(out, 2);  // version 2.4
  put_u16le(out, 4);
  put_u32le(out, 0);      // thiszone
  put_u32le(out, 0);      // sigfigs
  put_u32le(out, 65535);  // snaplen
  put_u32le(out, dot11::kLinktypeIeee80211);

  for (const auto& f : frames) {
    const std::uint64_t micros = static_cast<std::uint64_t>(std::floor(f.timestamp * 1e6));
    std::size_t body_len = dot11::kMgmtHeaderLen + dot11::fixed_params_len(f.subtype);
    if (subtype_carries_ies(f.subtype)) {
      for (const auto& ie : f.ies) body_len += 2 + ie.body.size();
    }
    put_u32le(out, static_cast<std::uint32_t>(micros / 1000000));
    put_u32le(out, static_cast<std::uint32_t>(micros % 1000000));
    put_u32le(out, static_cast<std::uint32_t>(body_len));
    put_u32le(out, static_cast<std::uint32_t>(body_len));

    const std::uint16_t fc = static_cast<std::uint16_t>(static_cast<unsigned>(f.subtype) << 4);
    put_u16le(out, fc);
    put_u16le(out, 0);  // duration
    out.insert(out.end(), f.dst.octets.begin(), f.dst.octets.end());
    out.insert(out.end(), f.src.octets.begin(), f.src.octets.end());
    // addr3 (BSSID): not part of the frame model; mirror the destination
    out.insert(out.end(), f.dst.octets.begin(), f.dst.octets.end());
    put_u16le(out, static_cast<std::uint16_t>(f.seq_num << 4));  // fragment 0

    for (std::size_t i = 0; i < dot11::fixed_params_len(f.subtype); ++i) out.push_back(0);
    if (subtype_carries_ies(f.subtype)) {
      for (const auto& ie : f.ies) {
        out.push_back(ie.tag);
        out.push_back(static_cast<std::uint8_t>(ie.body.size()));
        out.insert(out.end(), ie.body.begin(), ie.body.end());
      }
    }
  }
  return out;
}

void write_capture_file(const std::string& path, std::span<const ManagementFrame> frames) {
  const auto bytes = write_capture(frames);
  std::ofstream outfile(path, std::ios::binary | std::ios::trunc);
  if (!outfile) throw StorageError("cannot open for writing: " + path);
  outfile.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
  if (!outfile) throw StorageError("write failed: " + path);
}

// ---- profile config file ----

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

FsmState parse_state_or_throw(const std::string& text, const std::string& where) {
  auto st = FsmState::parse(text);
  if (!st) throw ConfigError(where + ": bad state '" + text + "'");
  return *st;
}

}  // namespace

std::vector<std::pair<VendorProfile, std::size_t>> parse_profiles(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool saw_version = false;

  std::vector<std::pair<VendorProfile, std::size_t>> out;
  VendorProfile current;
  std::size_t current_count = 0;
  bool have_profile = false;
  std::vector<std::pair<std::string, std::string>> pending_rows;

  auto flush = [&] {
    if (!have_profile) return;
    // transition rows can only be resolved once the state list is known
    current.transition_probs.assign(current.states.size(), {});
    for (auto& [state_text, row_text] : pending_rows) {
      const FsmState st = parse_state_or_throw(state_text, "profile " + current.name);
      const auto it = std::find(current.states.begin(), current.states.end(), st);
      if (it == current.states.end())
        throw ConfigError("profile " + current.name + ": row for unknown state " + state_text);
      std::vector<double> row;
      for (const auto& tok : split_ws(row_text)) row.push_back(std::stod(tok));
      current.transition_probs[static_cast<std::size_t>(it - current.states.begin())] =
          std::move(row);
    }
    current.validate();
    if (current_count == 0)
      throw ConfigError("profile " + current.name + ": devices must be >= 1");
    out.emplace_back(std::move(current), current_count);
    current = VendorProfile{};
    current_count = 0;
    pending_rows.clear();
  };

  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line.erase(0, start);

    if (!saw_version) {
      if (line != "profiles.v1")
        throw FormatError("profiles file must start with 'profiles.v1', got '" + line + "'");
      saw_version = true;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']' || line.rfind("[profile ", 0) != 0)
        throw ConfigError("line " + std::to_string(lineno) + ": expected [profile NAME]");
      flush();
      have_profile = true;
      current.name = line.substr(9, line.size() - 10);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::size_t vstart = value.find_first_not_of(" \t");
    value.erase(0, vstart == std::string::npos ? value.size() : vstart);
    if (!have_profile)
      throw ConfigError("line " + std::to_string(lineno) + ": key outside [profile] section");

    const std::string where = "profile " + current.name;
    if (key == "devices") {
      current_count = static_cast<std::size_t>(std::stoul(value));
    } else if (key == "states") {
      for (const auto& tok : split_ws(value))
        current.states.push_back(parse_state_or_throw(tok, where));
    } else if (key == "initial") {
      current.initial_state = parse_state_or_throw(value, where);
    } else if (key.rfind("row ", 0) == 0) {
      pending_rows.emplace_back(key.substr(4), value);
    } else if (key == "frames_per_burst") {
      current.frames_per_burst = Dist::parse(value);
    } else if (key == "intra_gap") {
      current.intra_gap = Dist::parse(value);
    } else if (key == "inter_gap") {
      current.inter_gap = Dist::parse(value);
    } else if (key == "bursts_per_device") {
      current.bursts_per_device = Dist::parse(value);
    } else if (key == "seq_increment") {
      current.seq_increment = Dist::parse(value);
    } else if (key == "ie_tags") {
      for (const auto& tok : split_ws(value)) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
          throw ConfigError(where + ": ie_tags entries are TAG:PROB");
        current.ie_tags.emplace_back(std::stoi(tok.substr(0, colon)),
                                     std::stod(tok.substr(colon + 1)));
      }
    } else if (key == "mac_policy") {
      if (value == "persistent") {
        current.mac_policy = MacPolicy::persistent;
      } else if (value == "rotate_per_burst") {
        current.mac_policy = MacPolicy::rotate_per_burst;
      } else if (value.rfind("rotate_per_k:", 0) == 0) {
        current.mac_policy = MacPolicy::rotate_per_k;
        current.rotate_k = std::stoi(value.substr(13));
      } else {
        throw ConfigError(where + ": unknown mac_policy '" + value + "'");
      }
    } else if (key == "device_jitter") {
      current.device_jitter = std::stod(value);
    } else if (key == "ap") {
      current.is_ap = (value == "true" || value == "1" || value == "yes");
    } else if (key == "oui") {
      auto mac = MacAddress::parse(value + ":00:00:00");
      if (!mac) throw ConfigError(where + ": bad oui '" + value + "'");
      current.oui = mac->oui_prefix();
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!saw_version) throw FormatError("profiles file is empty (expected 'profiles.v1')");
  flush();
  if (out.empty()) throw ConfigError("profiles file defines no profiles");
  return out;
}

std::vector<std::pair<VendorProfile, std::size_t>> load_profiles(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open profiles file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_profiles(buf.str());
}

// ---- ground truth ----

void write_truth_csv(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot open for writing: " + path);
  out << "ordinal,device_id,profile\n";
  for (std::size_t i = 0; i < truth.frame_device.size(); ++i) {
    const auto& dev = truth.frame_device[i];
    const auto it = truth.device_profile.find(dev);
    out << i << ',' << dev << ',' << (it == truth.device_profile.end() ? "" : it->second)
        << '\n';
  }
  if (!out) throw StorageError("write failed: " + path);
}

GroundTruth read_truth_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open truth file: " + path);
  GroundTruth truth;
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
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw RecordParseError(lineno, "truth csv needs 3 columns");
    const std::size_t ordinal = std::stoul(line.substr(0, c1));
    const std::string dev = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string profile = line.substr(c2 + 1);
    if (ordinal != truth.frame_device.size())
      throw RecordParseError(lineno, "truth csv ordinals must be dense and ascending");
    truth.frame_device.push_back(dev);
    if (!profile.empty()) truth.device_profile[dev] = profile;
  }
  return truth;
}

DeviceMap device_map_from_truth(std::span<const ManagementFrame> frames,
                                const GroundTruth& truth) {
  if (frames.size() != truth.frame_device.size())
    throw ContractViolation("device_map_from_truth: frame/truth size mismatch");
  DeviceMap map;
  for (std::size_t i = 0; i < frames.size(); ++i) map.emplace(frames[i].src, truth.frame_device[i]);
  return map;
}

}  // namespace fsmfp
