#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/featurize.hpp"
#include "fsmfp/similarity.hpp"

namespace fsmfp {

/// One probe request lifted out of a burst group for the association task.
struct ProbeEvent {
  double time = 0.0;
  std::string mac;        // pseudo identifier (source MAC as text)
  std::uint16_t seq_num = 0;
  IeBitmap ies;
  std::string device_id;
  std::size_t fingerprint = static_cast<std::size_t>(-1);  // enclosing group index
};

/// Extracts probe events from burst groups, time-sorted; `fingerprint` is the
/// group's index in `groups`.
std::vector<ProbeEvent> probe_events(std::span<const BurstGroup> groups);

/// IE-signature association: candidate with maximum Jaccard similarity of IE
/// bitmaps; ties broken toward the most recent candidate. Returns an index
/// into `candidates`, or nullopt when the window is empty.
std::optional<std::size_t> ie_baseline_associate(const ProbeEvent& target,
                                                 std::span<const ProbeEvent> candidates);

/// Sequence-number association: candidate minimizing the forward gap
/// (target.seq - candidate.seq) mod 4096; ties toward the most recent.
std::optional<std::size_t> seq_baseline_associate(const ProbeEvent& target,
                                                  std::span<const ProbeEvent> candidates);

enum class AssocMethod { ie, seq, fsm };

AssocMethod assoc_method_from_name(std::string_view name);  // throws ConfigError
const char* assoc_method_name(AssocMethod m);

struct DiscriminationConfig {
  std::size_t samples = 1000;
  double tau = 600.0;  // seconds; candidate window is [t - tau, t)
  std::uint64_t seed = 0;
};

/// Window-based probe association score: draws `samples` seeded targets
/// among events having at least one associable in-window predecessor and
/// reports the fraction whose chosen candidate shares the target's device.
/// Candidates carrying the target's own identifier (same MAC; for the fsm
/// method, same fingerprint) are excluded, so the task measures association
/// across identifier changes. The fsm method picks the candidate whose
/// fingerprint minimizes the combined distance; `combined` must cover every
/// fingerprint index referenced by the events.
/// Throws EvalError when tau <= 0 or no target is eligible.
double discrimination_accuracy(std::span<const ProbeEvent> events, AssocMethod method,
                               const DiscriminationConfig& config,
                               const DistanceMatrix* combined = nullptr);

}  // namespace fsmfp
