#include "fsmfp/featurize.hpp"

#include <cmath>

#include "fsmfp/errors.hpp"
#include "fsmfp/rand.hpp"

namespace fsmfp {

std::vector<double> FeatureVector::embedding() const {
  std::vector<double> e(kEmbeddingDim);
  const auto s = scalars();
  for (std::size_t i = 0; i < kScalarFeatures; ++i) e[i] = s[i];
  for (std::size_t t = 0; t < kIeBitmapBits; ++t)
    e[kScalarFeatures + t] = ie_bitmap[t] ? 1.0 : 0.0;
  return e;
}

IeBitmap ie_bitmap(const BurstGroup& group, std::uint64_t selector_seed) {
  std::vector<const ManagementFrame*> probes;
  for (const auto& b : group.bursts)
    for (const auto& f : b.frames)
      if (f.subtype == FrameSubtype::ProbeRequest) probes.push_back(&f);

  IeBitmap bm;
  if (probes.empty()) return bm;
  std::mt19937_64 rng(selector_seed);
  const auto* chosen = probes[bounded_uint(rng, probes.size())];
  for (const auto& ie : chosen->ies) bm.set(ie.tag);
  return bm;
}

FeatureVector extract_features(const Fsm& fsm, const BurstGroup& group,
                               std::uint64_t selector_seed) {
  FeatureVector v;
  v.fingerprint_id = fsm.group_id;
  v.device_id = fsm.device_id;

  v.x1_states = static_cast<double>(fsm.states.size());
  const std::uint64_t total = fsm.transition_total();
  v.x2_transitions = static_cast<double>(total);
  v.x3_self_transitions = static_cast<double>(fsm.self_transition_total());

  double entropy = 0.0;
  if (total > 0) {
    for (const auto& [edge, count] : fsm.transitions) {
      const double p = static_cast<double>(count) / static_cast<double>(total);
      entropy -= p * std::log2(p);
    }
    if (entropy < 0) entropy = 0;  // -0.0 from a single deterministic edge
  }
  v.x4_entropy = entropy;

  v.x5_transition_rate = fsm.duration > 0 ? v.x2_transitions / fsm.duration : 0.0;

  double max_gap = 0.0;
  for (double g : fsm.inter_burst_gaps) max_gap = std::max(max_gap, g);
  v.x6_time_gap = max_gap;
  v.x7_seq_gap = static_cast<double>(fsm.seq_span);

  v.ie_bitmap = ie_bitmap(group, selector_seed);
  return v;
}

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> vectors) {
  if (vectors.size() < 2) throw ConfigError("feature scaling needs at least 2 vectors");
  FeatureScaler s;
  const double n = static_cast<double>(vectors.size());
  for (const auto& v : vectors) {
    const auto x = v.scalars();
    for (std::size_t i = 0; i < kScalarFeatures; ++i) s.mean[i] += x[i];
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& v : vectors) {
    const auto x = v.scalars();
    for (std::size_t i = 0; i < kScalarFeatures; ++i) {
      const double d = x[i] - s.mean[i];
      s.stdev[i] += d * d;
    }
  }
  for (auto& sd : s.stdev) sd = std::sqrt(sd / n);  // population stdev
  return s;
}

FeatureVector FeatureScaler::apply(FeatureVector v) const {
  auto x = v.scalars();
  for (std::size_t i = 0; i < kScalarFeatures; ++i)
    x[i] = stdev[i] > 0 ? (x[i] - mean[i]) / stdev[i] : 0.0;
  v.set_scalars(x);
  v.normalized = true;
  return v;
}

std::vector<FeatureVector> normalize_features(std::vector<FeatureVector> vectors) {
  const FeatureScaler scaler = FeatureScaler::fit(vectors);
  for (auto& v : vectors) v = scaler.apply(std::move(v));
  return vectors;
}

std::string bitmap_to_hex(const IeBitmap& bm) {
  static const char* digits = "0123456789abcdef";
  std::string out(64, '0');
  for (std::size_t byte = 0; byte < 32; ++byte) {
    unsigned v = 0;
    for (unsigned bit = 0; bit < 8; ++bit)
      if (bm[byte * 8 + bit]) v |= 1u << bit;
    out[byte * 2] = digits[v >> 4];
    out[byte * 2 + 1] = digits[v & 0x0f];
  }
  return out;
}

IeBitmap bitmap_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw FormatError("ie bitmap hex must be 64 chars");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  IeBitmap bm;
  for (std::size_t byte = 0; byte < 32; ++byte) {
    const int hi = nibble(hex[byte * 2]);
    const int lo = nibble(hex[byte * 2 + 1]);
    if (hi < 0 || lo < 0) throw FormatError("ie bitmap hex has non-hex characters");
    const unsigned v = static_cast<unsigned>(hi << 4 | lo);
    for (unsigned bit = 0; bit < 8; ++bit)
      if (v & (1u << bit)) bm.set(byte * 8 + bit);
  }
  return bm;
}

}  // namespace fsmfp
