#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "fsmfp/errors.hpp"
#include "fsmfp/ingest.hpp"
#include "fsmfp/synthgen.hpp"
#include "support.hpp"

using namespace fsmfp;

TEST_SUITE("synthgen") {

TEST_CASE("dist parsing and support") {
  const auto c = Dist::parse("constant 4");
  CHECK(c.min_support() == 4);
  const auto u = Dist::parse("uniform 1 4");
  CHECK(u.max_support() == 4);
  const auto e = Dist::parse("truncexp 0.1 0.01 1.0");
  CHECK(e.min_support() == doctest::Approx(0.01));
  CHECK_THROWS_AS(Dist::parse("uniform 4 1"), ConfigError);
  CHECK_THROWS_AS(Dist::parse("gaussian 0 1"), ConfigError);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = e.sample(rng);
    CHECK(v >= 0.01);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("profile validation catches broken invariants") {
  auto p = testsupport::probe_profile("p");
  CHECK_NOTHROW(p.validate());

  auto bad_row = p;
  bad_row.transition_probs[0] = {0.5, 0.6};
  CHECK_THROWS_AS(bad_row.validate(), ConfigError);

  auto bad_intra = p;
  bad_intra.intra_gap = Dist::uniform(0.5, 1.5);  // support leaves (0, 1]
  CHECK_THROWS_AS(bad_intra.validate(), ConfigError);

  auto bad_inter = p;
  bad_inter.inter_gap = Dist::uniform(0.5, 5.0);  // support reaches <= 1
  CHECK_THROWS_AS(bad_inter.validate(), ConfigError);

  auto bad_initial = p;
  bad_initial.initial_state = FsmState{FrameSubtype::Beacon, DstClass::Broadcast};
  CHECK_THROWS_AS(bad_initial.validate(), ConfigError);
}

TEST_CASE("constructed burst: constant gaps give expected timestamps") {
  auto p = testsupport::probe_profile("p");
  p.frames_per_burst = Dist::constant(3);
  p.intra_gap = Dist::constant(0.5);
  p.bursts_per_device = Dist::constant(1);
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 1}}, 100.0, 9);
  REQUIRE(trace.frames.size() == 3);
  const double t0 = trace.frames[0].timestamp;
  CHECK(trace.frames[1].timestamp == doctest::Approx(t0 + 0.5));
  CHECK(trace.frames[2].timestamp == doctest::Approx(t0 + 1.0));
}

TEST_CASE("rotate_per_burst yields one randomized MAC per burst") {
  auto p = testsupport::probe_profile("p");
  p.mac_policy = MacPolicy::rotate_per_burst;
  p.bursts_per_device = Dist::constant(4);
  p.inter_gap = Dist::constant(5.0);
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 1}}, 500.0, 17);
  std::set<MacAddress> macs;
  const OuiTable empty;
  for (const auto& f : trace.frames) {
    macs.insert(f.src);
    CHECK(is_randomized_mac(f.src, empty));
  }
  CHECK(macs.size() == 4);
}

TEST_CASE("rotate_per_k rotates every k bursts") {
  auto p = testsupport::probe_profile("p");
  p.mac_policy = MacPolicy::rotate_per_k;
  p.rotate_k = 2;
  p.bursts_per_device = Dist::constant(6);
  p.inter_gap = Dist::constant(5.0);
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 1}}, 500.0, 17);
  std::set<MacAddress> macs;
  for (const auto& f : trace.frames) macs.insert(f.src);
  CHECK(macs.size() == 3);
}

TEST_CASE("seed determinism: identical inputs give byte-identical pcap") {
  std::vector<std::pair<VendorProfile, std::size_t>> profiles{
      {testsupport::probe_profile("a"), 3}, {testsupport::ap_profile("b"), 1}};
  const auto t1 = generate_trace(profiles, 200.0, 123);
  const auto t2 = generate_trace(profiles, 200.0, 123);
  CHECK(write_capture(t1.frames) == write_capture(t2.frames));
  const auto t3 = generate_trace(profiles, 200.0, 124);
  CHECK(write_capture(t1.frames) != write_capture(t3.frames));
}

TEST_CASE("label soundness: every frame maps to exactly one device") {
  std::vector<std::pair<VendorProfile, std::size_t>> profiles{
      {testsupport::probe_profile("a"), 2}, {testsupport::ap_profile("b"), 2}};
  const auto trace = generate_trace(profiles, 150.0, 5);
  REQUIRE(trace.truth.frame_device.size() == trace.frames.size());
  for (const auto& dev : trace.truth.frame_device) {
    CHECK_FALSE(dev.empty());
    CHECK(trace.truth.device_profile.count(dev) == 1);
  }
  // frames are time-sorted
  for (std::size_t i = 1; i < trace.frames.size(); ++i)
    CHECK(trace.frames[i - 1].timestamp <= trace.frames[i].timestamp);
}

TEST_CASE("empirical transition frequencies match the profile rows") {
  auto p = testsupport::probe_profile("p");
  p.device_jitter = 0.0;
  p.frames_per_burst = Dist::constant(40);
  p.bursts_per_device = Dist::constant(20);
  p.inter_gap = Dist::constant(2.0);
  p.intra_gap = Dist::constant(0.05);
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 16}}, 10000.0, 99);

  // conditional next-state frequencies per source state, same-MAC adjacency
  // within bursts (constant 0.05 intra vs 2.0 inter keeps bursts separable)
  std::map<MacAddress, const ManagementFrame*> last_by_mac;
  std::map<std::pair<std::size_t, std::size_t>, double> counts;
  std::map<std::size_t, double> row_totals;
  auto state_index = [&](const ManagementFrame& f) -> std::size_t {
    const FsmState st = state_of(f);
    return static_cast<std::size_t>(
        std::find(p.states.begin(), p.states.end(), st) - p.states.begin());
  };
  std::size_t transitions_seen = 0;
  for (const auto& f : trace.frames) {
    const auto it = last_by_mac.find(f.src);
    if (it != last_by_mac.end() && f.timestamp - it->second->timestamp <= 1.0) {
      const std::size_t from = state_index(*it->second);
      const std::size_t to = state_index(f);
      counts[{from, to}] += 1;
      row_totals[from] += 1;
      ++transitions_seen;
    }
    last_by_mac[f.src] = &f;
  }
  REQUIRE(transitions_seen >= 10000);
  for (const auto& [from, total] : row_totals) {
    if (total < 500) continue;
    double tv = 0;
    for (std::size_t to = 0; to < p.states.size(); ++to) {
      const auto it = counts.find({from, to});
      const double freq = it == counts.end() ? 0.0 : it->second / total;
      tv += std::abs(freq - p.transition_probs[from][to]);
    }
    CHECK(tv / 2.0 <= 0.03);
  }
}

TEST_CASE("write_capture: empty input gives the bare 24-byte header") {
  const auto bytes = write_capture(std::vector<ManagementFrame>{});
  CHECK(bytes.size() == 24);
}

TEST_CASE("write_capture quantizes timestamps to floor microseconds") {
  auto f = testsupport::frame(0.0000015, "02:00:00:00:00:01");
  const auto bytes = write_capture(std::vector<ManagementFrame>{f});
  // ts_usec is the second little-endian u32 of the record header at offset 24
  const std::uint32_t usec = static_cast<std::uint32_t>(bytes[28]) |
                             (static_cast<std::uint32_t>(bytes[29]) << 8) |
                             (static_cast<std::uint32_t>(bytes[30]) << 16) |
                             (static_cast<std::uint32_t>(bytes[31]) << 24);
  CHECK(usec == 1);
}

TEST_CASE("profile config file round-trip") {
  const char* text = R"(profiles.v1
# two profiles
[profile phone-a]
devices = 3
states = ProbeRequest/B Authentication/U
initial = ProbeRequest/B
row ProbeRequest/B = 0.8 0.2
row Authentication/U = 0.5 0.5
frames_per_burst = uniform 3 8
intra_gap = truncexp 0.05 0.001 1.0
inter_gap = uniform 2 10
bursts_per_device = constant 12
seq_increment = uniform 1 3
ie_tags = 0:1.0 50:0.75
mac_policy = rotate_per_burst
device_jitter = 0.25

[profile ap-x]
devices = 1
states = Beacon/B
initial = Beacon/B
row Beacon/B = 1.0
frames_per_burst = constant 3
intra_gap = constant 0.1
inter_gap = constant 2
bursts_per_device = constant 4
seq_increment = constant 1
mac_policy = persistent
ap = true
oui = 3c:aa:bb
)";
  const auto profiles = parse_profiles(text);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].first.name == "phone-a");
  CHECK(profiles[0].second == 3);
  CHECK(profiles[0].first.mac_policy == MacPolicy::rotate_per_burst);
  CHECK(profiles[0].first.ie_tags.size() == 2);
  CHECK(profiles[1].first.is_ap);
  CHECK(profiles[1].first.oui == 0x3caabbu);

  CHECK_NOTHROW(generate_trace(profiles, 60.0, 1));

  CHECK_THROWS_AS(parse_profiles("bogus\n"), FormatError);
  CHECK_THROWS_AS(parse_profiles("profiles.v1\n[profile x]\nnonsense = 1\n"), ConfigError);
}

TEST_CASE("truth csv round-trip") {
  std::vector<std::pair<VendorProfile, std::size_t>> profiles{
      {testsupport::probe_profile("a"), 2}};
  const auto trace = generate_trace(profiles, 100.0, 7);
  const std::string path = "/tmp/fsmfp_test_truth.csv";
  write_truth_csv(path, trace.truth);
  const auto truth = read_truth_csv(path);
  CHECK(truth.frame_device == trace.truth.frame_device);
  CHECK(truth.device_profile == trace.truth.device_profile);
}

}  // TEST_SUITE
