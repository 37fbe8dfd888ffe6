#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/frame.hpp"

namespace fsmfp {

enum class DstClass : std::uint8_t { Broadcast, Unicast };

/// FSM state: frame subtype plus the direction class of the destination.
struct FsmState {
  FrameSubtype subtype = FrameSubtype::ProbeRequest;
  DstClass dst = DstClass::Broadcast;

  auto operator<=>(const FsmState&) const = default;

  /// "ProbeRequest/B" or "Authentication/U" (the fsm.v1 wire form).
  std::string to_string() const;
  static std::optional<FsmState> parse(std::string_view text);
};

FsmState state_of(const ManagementFrame& frame);

/// Per-burst-group finite state machine: directed transition counts between
/// directional subtype states, plus the timing context needed downstream.
struct Fsm {
  std::string group_id;
  std::string device_id;
  std::set<FsmState> states;
  std::map<std::pair<FsmState, FsmState>, std::uint64_t> transitions;
  FsmState initial{};
  double start_time = 0.0;
  double duration = 0.0;  // last frame time - first frame time across the group
  std::uint64_t frame_count = 0;
  std::uint64_t burst_count = 0;
  std::vector<double> inter_burst_gaps;  // P-1 entries for a P-burst group
  std::uint32_t seq_span = 0;  // max forward seq gap mod 4096 across burst joins

  std::uint64_t transition_total() const;
  std::uint64_t self_transition_total() const;
};

/// Builds the group FSM: every adjacent frame pair inside a burst contributes
/// one transition count; no transition spans a burst boundary. Throws
/// ContractViolation on an empty group.
Fsm build_fsm(const BurstGroup& group);

/// Union of states, pointwise sum of counts, summed durations, concatenated
/// gaps; initial taken from the earliest member. Throws ContractViolation on
/// an empty list.
Fsm merge_fsms(std::span<const Fsm> fsms);

/// Mean total transition count per FSM, grouped by vendor tag.
std::map<std::string, double> vendor_transition_means(
    std::span<const Fsm> fsms, const std::function<std::string(const Fsm&)>& vendor_of);

}  // namespace fsmfp
