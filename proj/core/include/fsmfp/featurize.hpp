#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/fsm.hpp"

namespace fsmfp {

inline constexpr std::size_t kIeBitmapBits = 256;
inline constexpr std::size_t kScalarFeatures = 7;
inline constexpr std::size_t kEmbeddingDim = kScalarFeatures + kIeBitmapBits;  // 263

using IeBitmap = std::bitset<kIeBitmapBits>;

/// Fixed FSM embedding: seven scalar features plus the IE presence bitmap of
/// one seeded-random probe request from the group.
struct FeatureVector {
  std::string fingerprint_id;
  std::string device_id;
  double x1_states = 0;            // unique directional subtype states
  double x2_transitions = 0;       // total transition count
  double x3_self_transitions = 0;  // count of s_i -> s_i
  double x4_entropy = 0;           // Shannon entropy of transition probabilities, bits
  double x5_transition_rate = 0;   // x2 / duration, 0 when duration is 0
  double x6_time_gap = 0;          // max inter-burst gap, 0 for single-burst groups
  double x7_seq_gap = 0;           // max forward seq gap mod 4096 across burst joins
  IeBitmap ie_bitmap;
  bool normalized = false;

  std::array<double, kScalarFeatures> scalars() const {
    return {x1_states,          x2_transitions, x3_self_transitions, x4_entropy,
            x5_transition_rate, x6_time_gap,    x7_seq_gap};
  }
  void set_scalars(const std::array<double, kScalarFeatures>& v) {
    x1_states = v[0];
    x2_transitions = v[1];
    x3_self_transitions = v[2];
    x4_entropy = v[3];
    x5_transition_rate = v[4];
    x6_time_gap = v[5];
    x7_seq_gap = v[6];
  }

  /// Flat 263-dim embedding: scalars first, then bitmap flags as 0/1.
  std::vector<double> embedding() const;
};

/// IE tag presence bitmap of one probe request chosen by a seeded uniform
/// draw over the group's probe requests; all-zero when the group has none.
IeBitmap ie_bitmap(const BurstGroup& group, std::uint64_t selector_seed);

/// Embeds one FSM (built from `group`) into the fixed feature vector.
/// Degenerate inputs yield the documented zero conventions, never errors.
FeatureVector extract_features(const Fsm& fsm, const BurstGroup& group,
                               std::uint64_t selector_seed);

/// Per-feature z-scoring statistics (population stdev). Zero-variance
/// features map to all-zeros.
struct FeatureScaler {
  std::array<double, kScalarFeatures> mean{};
  std::array<double, kScalarFeatures> stdev{};

  static FeatureScaler fit(std::span<const FeatureVector> vectors);
  FeatureVector apply(FeatureVector v) const;
};

/// Z-scores the seven scalar features over the dataset; the IE bitmap passes
/// through unscaled. Throws ConfigError on fewer than 2 vectors.
std::vector<FeatureVector> normalize_features(std::vector<FeatureVector> vectors);

/// 64-char lowercase hex encoding of the bitmap (byte k holds tags
/// 8k..8k+7, LSB first; bytes emitted in ascending k).
std::string bitmap_to_hex(const IeBitmap& bm);
IeBitmap bitmap_from_hex(std::string_view hex);  // throws FormatError

}  // namespace fsmfp
