#include "fsmfp/baselines.hpp"

#include <algorithm>

#include "fsmfp/errors.hpp"
#include "fsmfp/rand.hpp"

namespace fsmfp {

AssocMethod assoc_method_from_name(std::string_view name) {
  if (name == "ie") return AssocMethod::ie;
  if (name == "seq") return AssocMethod::seq;
  if (name == "fsm") return AssocMethod::fsm;
  throw ConfigError("unknown association method '" + std::string(name) + "'");
}

const char* assoc_method_name(AssocMethod m) {
  switch (m) {
    case AssocMethod::ie: return "ie";
    case AssocMethod::seq: return "seq";
    case AssocMethod::fsm: return "fsm";
  }
  return "?";
}

std::vector<ProbeEvent> probe_events(std::span<const BurstGroup> groups) {
  std::vector<ProbeEvent> events;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& burst : groups[g].bursts) {
      for (const auto& f : burst.frames) {
        if (f.subtype != FrameSubtype::ProbeRequest) continue;
        ProbeEvent e;
        e.time = f.timestamp;
        e.mac = f.src.to_string();
        e.seq_num = f.seq_num;
        for (const auto& ie : f.ies) e.ies.set(ie.tag);
        e.device_id = groups[g].device_id;
        e.fingerprint = g;
        events.push_back(std::move(e));
      }
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ProbeEvent& a, const ProbeEvent& b) { return a.time < b.time; });
  return events;
}

namespace {

double jaccard(const IeBitmap& a, const IeBitmap& b) {
  const std::size_t inter = (a & b).count();
  const std::size_t uni = (a | b).count();
  if (uni == 0) return 1.0;  // two empty IE sets are identical
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint32_t forward_seq_gap(std::uint16_t target, std::uint16_t candidate) {
  return (static_cast<std::uint32_t>(target) + 4096u - candidate) & 0x0fffu;
}

}  // namespace

std::optional<std::size_t> ie_baseline_associate(const ProbeEvent& target,
                                                 std::span<const ProbeEvent> candidates) {
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double score = jaccard(target.ies, candidates[k].ies);
    if (score >= best_score) {  // >= so ties go to the most recent candidate
      best_score = score;
      best = k;
    }
  }
  return best;
}

std::optional<std::size_t> seq_baseline_associate(const ProbeEvent& target,
                                                  std::span<const ProbeEvent> candidates) {
  std::optional<std::size_t> best;
  std::uint32_t best_gap = 0xffffffffu;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::uint32_t gap = forward_seq_gap(target.seq_num, candidates[k].seq_num);
    if (gap <= best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

double discrimination_accuracy(std::span<const ProbeEvent> events, AssocMethod method,
                               const DiscriminationConfig& config,
                               const DistanceMatrix* combined) {
  if (config.tau <= 0) throw EvalError("discrimination_accuracy: tau must be > 0");
  if (config.samples == 0) throw EvalError("discrimination_accuracy: samples must be > 0");
  if (method == AssocMethod::fsm && combined == nullptr)
    throw ContractViolation("discrimination_accuracy: fsm method needs a combined matrix");

  // candidate predecessors live in [t - tau, t) and must not carry the
  // target's own identifier (same MAC; same fingerprint for fsm)
  auto window_candidates = [&](std::size_t target_idx) {
    std::vector<std::size_t> out;
    const ProbeEvent& t = events[target_idx];
    for (std::size_t k = target_idx; k-- > 0;) {
      const ProbeEvent& c = events[k];
      if (c.time >= t.time) continue;  // same-timestamp events are not predecessors
      if (c.time < t.time - config.tau) break;
      if (method == AssocMethod::fsm) {
        if (c.fingerprint == t.fingerprint) continue;
      } else if (c.mac == t.mac) {
        continue;
      }
      out.push_back(k);
    }
    std::reverse(out.begin(), out.end());  // ascending time, most recent last
    return out;
  };

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (!window_candidates(i).empty()) eligible.push_back(i);
  if (eligible.empty()) throw EvalError("discrimination_accuracy: no eligible targets");

  std::mt19937_64 rng(derive_seed(config.seed, 0xd15c));
  std::size_t correct = 0;
  for (std::size_t s = 0; s < config.samples; ++s) {
    const std::size_t target_idx = eligible[bounded_uint(rng, eligible.size())];
    const ProbeEvent& target = events[target_idx];
    const auto idx = window_candidates(target_idx);

    std::vector<ProbeEvent> candidates;
    candidates.reserve(idx.size());
    for (std::size_t k : idx) candidates.push_back(events[k]);

    std::optional<std::size_t> pick;
    switch (method) {
      case AssocMethod::ie:
        pick = ie_baseline_associate(target, candidates);
        break;
      case AssocMethod::seq:
        pick = seq_baseline_associate(target, candidates);
        break;
      case AssocMethod::fsm: {
        double best_d = 0;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
          const double d = combined->at(target.fingerprint, candidates[k].fingerprint);
          if (!pick || d <= best_d) {
            best_d = d;
            pick = k;
          }
        }
        break;
      }
    }
    if (pick && candidates[*pick].device_id == target.device_id &&
        device_known(target.device_id))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(config.samples);
}

}  // namespace fsmfp
