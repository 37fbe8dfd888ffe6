#include <doctest.h>

#include <cmath>

#include "fsmfp/errors.hpp"
#include "fsmfp/fsm.hpp"
#include "fsmfp/synthgen.hpp"
#include "support.hpp"

using namespace fsmfp;
using testsupport::burst_of;
using testsupport::frame;
using testsupport::group_of;

namespace {

const FsmState kProbeB{FrameSubtype::ProbeRequest, DstClass::Broadcast};
const FsmState kAuthU{FrameSubtype::Authentication, DstClass::Unicast};

}  // namespace

TEST_SUITE("fsm") {

TEST_CASE("state strings round-trip") {
  CHECK(kProbeB.to_string() == "ProbeRequest/B");
  CHECK(kAuthU.to_string() == "Authentication/U");
  CHECK(FsmState::parse("ProbeRequest/B") == kProbeB);
  CHECK(FsmState::parse("Authentication/U") == kAuthU);
  CHECK(FsmState::parse("ProbeRequest/X") == std::nullopt);
  CHECK(FsmState::parse("Nope/B") == std::nullopt);
}

TEST_CASE("adjacency counting with a self-loop and a direction change") {
  std::vector<ManagementFrame> frames;
  frames.push_back(frame(0.0, "02:00:00:00:00:01"));
  frames.push_back(frame(0.1, "02:00:00:00:00:01"));
  frames.push_back(frame(0.2, "02:00:00:00:00:01", FrameSubtype::Authentication,
                         "04:00:00:00:00:99"));
  const auto fsm = build_fsm(group_of({burst_of(frames)}));

  CHECK(fsm.states.size() == 2);
  CHECK(fsm.initial == kProbeB);
  REQUIRE(fsm.transitions.size() == 2);
  CHECK(fsm.transitions.at({kProbeB, kProbeB}) == 1);
  CHECK(fsm.transitions.at({kProbeB, kAuthU}) == 1);
  CHECK(fsm.self_transition_total() == 1);
  CHECK(fsm.transition_total() == 2);
  CHECK(fsm.duration == doctest::Approx(0.2));
}

TEST_CASE("one-frame burst: one state, no transitions, zero duration") {
  const auto fsm = build_fsm(group_of({burst_of({frame(5.0, "02:00:00:00:00:01")})}));
  CHECK(fsm.states.size() == 1);
  CHECK(fsm.transitions.empty());
  CHECK(fsm.duration == 0.0);
  CHECK(fsm.frame_count == 1);
  CHECK(fsm.burst_count == 1);
}

TEST_CASE("transition counts never span burst boundaries") {
  std::vector<ManagementFrame> b1, b2;
  for (int k = 0; k < 3; ++k) b1.push_back(frame(k * 0.1, "02:00:00:00:00:01"));
  for (int k = 0; k < 4; ++k) b2.push_back(frame(10.0 + k * 0.1, "02:00:00:00:00:01"));
  const auto fsm = build_fsm(group_of({burst_of(b1, 0), burst_of(b2, 1)}));
  CHECK(fsm.frame_count == 7);
  CHECK(fsm.burst_count == 2);
  CHECK(fsm.transition_total() == 5);  // 7 frames - 2 bursts
  REQUIRE(fsm.inter_burst_gaps.size() == 1);
  CHECK(fsm.inter_burst_gaps[0] == doctest::Approx(10.0 - 0.2));
}

TEST_CASE("seq_span uses the modulo-4096 forward gap across burst joins") {
  auto f1 = frame(0.0, "02:00:00:00:00:01");
  f1.seq_num = 4090;
  auto f2 = frame(10.0, "02:00:00:00:00:01");
  f2.seq_num = 6;
  const auto fsm = build_fsm(group_of({burst_of({f1}, 0), burst_of({f2}, 1)}));
  CHECK(fsm.seq_span == 12);
}

TEST_CASE("build_fsm rejects empty groups") {
  CHECK_THROWS_AS(build_fsm(group_of({})), ContractViolation);
}

TEST_CASE("merge of one FSM is the identity on all counted fields") {
  std::vector<ManagementFrame> frames;
  for (int k = 0; k < 5; ++k) frames.push_back(frame(k * 0.2, "02:00:00:00:00:01"));
  const auto a = build_fsm(group_of({burst_of(frames)}));
  const auto merged = merge_fsms(std::vector<Fsm>{a});
  CHECK(merged.states == a.states);
  CHECK(merged.transitions == a.transitions);
  CHECK(merged.duration == a.duration);
  CHECK(merged.frame_count == a.frame_count);
  CHECK(merged.initial == a.initial);
}

TEST_CASE("merge sums transition counts pointwise") {
  Fsm a, b;
  a.states = {kProbeB, kAuthU};
  a.transitions[{kProbeB, kAuthU}] = 1;
  a.start_time = 0;
  b.states = {kProbeB, kAuthU};
  b.transitions[{kProbeB, kAuthU}] = 2;
  b.transitions[{kAuthU, kAuthU}] = 1;
  b.start_time = 5;
  const auto merged = merge_fsms(std::vector<Fsm>{a, b});
  CHECK(merged.transitions.at({kProbeB, kAuthU}) == 3);
  CHECK(merged.transitions.at({kAuthU, kAuthU}) == 1);
  CHECK(merged.initial == a.initial);  // earliest member wins
}

TEST_CASE("merge is associative and commutative on transition counts") {
  auto p = testsupport::probe_profile("p");
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 2}}, 300.0, 8);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  const auto groups = group_bursts(bursts, 1, devmap);
  REQUIRE(groups.size() >= 3);
  const auto f0 = build_fsm(groups[0]);
  const auto f1 = build_fsm(groups[1]);
  const auto f2 = build_fsm(groups[2]);

  const auto ab_c = merge_fsms(std::vector<Fsm>{merge_fsms(std::vector<Fsm>{f0, f1}), f2});
  const auto a_bc = merge_fsms(std::vector<Fsm>{f0, merge_fsms(std::vector<Fsm>{f1, f2})});
  const auto cba = merge_fsms(std::vector<Fsm>{f2, f1, f0});
  CHECK(ab_c.transitions == a_bc.transitions);
  CHECK(ab_c.transitions == cba.transitions);
  CHECK(ab_c.states == cba.states);
}

TEST_CASE("merging per-burst FSMs reproduces the group FSM") {
  auto p = testsupport::probe_profile("p");
  p.mac_policy = MacPolicy::rotate_per_burst;
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 3}}, 400.0, 23);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  const auto groups = group_bursts(bursts, 4, devmap);
  REQUIRE(!groups.empty());

  for (const auto& g : groups) {
    const auto whole = build_fsm(g);
    std::vector<Fsm> parts;
    for (const auto& b : g.bursts) parts.push_back(build_fsm(group_of({b}, g.device_id)));
    const auto merged = merge_fsms(parts);
    CHECK(merged.states == whole.states);
    CHECK(merged.transitions == whole.transitions);
    CHECK(merged.frame_count == whole.frame_count);
    CHECK(merged.burst_count == whole.burst_count);
  }
}

TEST_CASE("conservation: total transitions = frames - bursts, always") {
  auto p = testsupport::probe_profile("p");
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 4}}, 500.0, 71);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  for (std::size_t pv : {std::size_t{1}, std::size_t{3}, kGroupAll}) {
    for (const auto& g : group_bursts(bursts, pv, devmap)) {
      const auto fsm = build_fsm(g);
      CHECK(fsm.transition_total() == fsm.frame_count - fsm.burst_count);
      // state-context soundness
      for (const auto& [edge, count] : fsm.transitions) {
        CHECK(fsm.states.count(edge.first) == 1);
        CHECK(fsm.states.count(edge.second) == 1);
        CHECK(count >= 1);
      }
      CHECK(fsm.states.count(fsm.initial) == 1);
    }
  }
}

TEST_CASE("build_fsm is a pure function of the group") {
  std::vector<ManagementFrame> frames;
  for (int k = 0; k < 6; ++k) frames.push_back(frame(k * 0.3, "02:00:00:00:00:01"));
  const auto g = group_of({burst_of(frames)});
  const auto a = build_fsm(g);
  const auto b = build_fsm(g);
  CHECK(a.states == b.states);
  CHECK(a.transitions == b.transitions);
  CHECK(a.duration == b.duration);
}

TEST_CASE("vendor means: simple averages per vendor") {
  Fsm a, b, c;
  a.transitions[{kProbeB, kProbeB}] = 4;
  b.transitions[{kProbeB, kProbeB}] = 6;
  c.transitions[{kProbeB, kProbeB}] = 10;
  a.device_id = "x";
  b.device_id = "y";
  c.device_id = "z";
  const auto means = vendor_transition_means(
      std::vector<Fsm>{a, b, c},
      [](const Fsm& f) { return f.device_id == "z" ? std::string("v2") : std::string("v1"); });
  CHECK(means.at("v1") == doctest::Approx(5.0));
  CHECK(means.at("v2") == doctest::Approx(10.0));
}

TEST_CASE("vendor means on generator output track the burst-length expectation") {
  // expected transitions per single-burst FSM = E[frames per burst] - 1
  auto small = testsupport::probe_profile("small");
  small.frames_per_burst = Dist::uniform(3, 5);  // mean 4 -> 3 transitions
  small.bursts_per_device = Dist::constant(25);
  auto large = testsupport::probe_profile("large");
  large.frames_per_burst = Dist::uniform(9, 11);  // mean 10 -> 9 transitions
  large.bursts_per_device = Dist::constant(25);

  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{small, 12}, {large, 12}}, 20000.0,
      55);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  const auto groups = group_bursts(bursts, 1, devmap);
  REQUIRE(groups.size() >= 500);

  std::vector<Fsm> fsms;
  for (const auto& g : groups) fsms.push_back(build_fsm(g));
  const auto& truth = trace.truth;
  const auto means = vendor_transition_means(fsms, [&](const Fsm& f) {
    return truth.device_profile.at(f.device_id);
  });
  CHECK(means.at("small") == doctest::Approx(3.0).epsilon(0.10));
  CHECK(means.at("large") == doctest::Approx(9.0).epsilon(0.10));
}

}  // TEST_SUITE
