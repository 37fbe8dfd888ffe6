#include "fsmfp/fsm.hpp"

#include <algorithm>

#include "fsmfp/errors.hpp"

namespace fsmfp {

std::string FsmState::to_string() const {
  std::string s = subtype_name(subtype);
  s += '/';
  s += dst == DstClass::Broadcast ? 'B' : 'U';
  return s;
}

std::optional<FsmState> FsmState::parse(std::string_view text) {
  const auto slash = text.rfind('/');
  if (slash == std::string_view::npos || slash + 2 != text.size()) return std::nullopt;
  const auto subtype = subtype_from_name(text.substr(0, slash));
  if (!subtype) return std::nullopt;
  const char d = text[slash + 1];
  if (d != 'B' && d != 'U') return std::nullopt;
  return FsmState{*subtype, d == 'B' ? DstClass::Broadcast : DstClass::Unicast};
}

FsmState state_of(const ManagementFrame& frame) {
  return {frame.subtype, frame.dst.is_broadcast() ? DstClass::Broadcast : DstClass::Unicast};
}

std::uint64_t Fsm::transition_total() const {
  std::uint64_t total = 0;
  for (const auto& [edge, count] : transitions) total += count;
  return total;
}

std::uint64_t Fsm::self_transition_total() const {
  std::uint64_t total = 0;
  for (const auto& [edge, count] : transitions)
    if (edge.first == edge.second) total += count;
  return total;
}

Fsm build_fsm(const BurstGroup& group) {
  if (group.bursts.empty()) throw ContractViolation("build_fsm: empty group");
  for (const auto& b : group.bursts)
    if (b.frames.empty()) throw ContractViolation("build_fsm: burst without frames");

  Fsm fsm;
  fsm.group_id = group.pseudo_id;
  fsm.device_id = group.device_id;
  fsm.burst_count = group.bursts.size();
  fsm.initial = state_of(group.bursts.front().frames.front());
  fsm.start_time = group.bursts.front().frames.front().timestamp;

  double last_time = fsm.start_time;
  for (std::size_t bi = 0; bi < group.bursts.size(); ++bi) {
    const Burst& burst = group.bursts[bi];
    FsmState prev{};
    for (std::size_t fi = 0; fi < burst.frames.size(); ++fi) {
      const FsmState cur = state_of(burst.frames[fi]);
      fsm.states.insert(cur);
      if (fi > 0) fsm.transitions[{prev, cur}] += 1;  // adjacency within bursts only
      prev = cur;
      ++fsm.frame_count;
    }
    last_time = burst.frames.back().timestamp;

    if (bi > 0) {
      const Burst& before = group.bursts[bi - 1];
      fsm.inter_burst_gaps.push_back(burst.start_time - before.end_time);
      const std::uint16_t last_seq = before.frames.back().seq_num;
      const std::uint16_t first_seq = burst.frames.front().seq_num;
      const std::uint32_t gap = (static_cast<std::uint32_t>(first_seq) + 4096u - last_seq) & 0x0fffu;
      fsm.seq_span = std::max(fsm.seq_span, gap);
    }
  }
  fsm.duration = last_time - fsm.start_time;
  return fsm;
}

Fsm merge_fsms(std::span<const Fsm> fsms) {
  if (fsms.empty()) throw ContractViolation("merge_fsms: empty list");

  const Fsm* earliest = &fsms.front();
  for (const auto& f : fsms)
    if (f.start_time < earliest->start_time) earliest = &f;

  Fsm out;
  out.group_id = earliest->group_id;
  out.device_id = earliest->device_id;
  out.initial = earliest->initial;
  out.start_time = earliest->start_time;
  for (const auto& f : fsms) {
    out.states.insert(f.states.begin(), f.states.end());
    for (const auto& [edge, count] : f.transitions) out.transitions[edge] += count;
    out.duration += f.duration;
    out.frame_count += f.frame_count;
    out.burst_count += f.burst_count;
    out.inter_burst_gaps.insert(out.inter_burst_gaps.end(), f.inter_burst_gaps.begin(),
                                f.inter_burst_gaps.end());
    out.seq_span = std::max(out.seq_span, f.seq_span);
  }
  return out;
}

std::map<std::string, double> vendor_transition_means(
    std::span<const Fsm> fsms, const std::function<std::string(const Fsm&)>& vendor_of) {
  std::map<std::string, std::pair<double, std::uint64_t>> acc;
  for (const auto& f : fsms) {
    auto& [sum, n] = acc[vendor_of(f)];
    sum += static_cast<double>(f.transition_total());
    n += 1;
  }
  std::map<std::string, double> means;
  for (const auto& [vendor, stat] : acc)
    means[vendor] = stat.first / static_cast<double>(stat.second);
  return means;
}

}  // namespace fsmfp
