#include "fsmfp/similarity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "fsmfp/errors.hpp"
#include "fsmfp/parallel.hpp"

namespace fsmfp {

const char* metric_name(MetricTag tag) {
  switch (tag) {
    case MetricTag::euclidean: return "euclidean";
    case MetricTag::manhattan: return "manhattan";
    case MetricTag::cosine: return "cosine";
    case MetricTag::combined: return "combined";
  }
  return "?";
}

float DistanceMatrix::max_value() const {
  float m = 0.0f;
  for (float v : values) m = std::max(m, v);
  return m;
}

// ---- reference span distances ----

namespace {

void check_dims(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ContractViolation("distance: dimension mismatch (" + std::to_string(x.size()) +
                            " vs " + std::to_string(y.size()) + ")");
}

double cosine_from_parts(double dot, double nx_sq, double ny_sq) {
  if (nx_sq == 0.0 && ny_sq == 0.0) return 0.0;  // two zero vectors are identical
  if (nx_sq == 0.0 || ny_sq == 0.0) return 1.0;
  const double c = 1.0 - dot / (std::sqrt(nx_sq) * std::sqrt(ny_sq));
  return c < 0.0 ? 0.0 : c;  // clamp parallel-vector rounding below zero
}

}  // namespace

double euclidean(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y);
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double manhattan(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y);
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
  return acc;
}

double cosine(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y);
  double dot = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  return cosine_from_parts(dot, nx, ny);
}

// ---- packed fast path ----

PackedVector PackedVector::from(const FeatureVector& v) {
  PackedVector p;
  p.scalars = v.scalars();
  for (std::size_t t = 0; t < kIeBitmapBits; ++t)
    if (v.ie_bitmap[t]) p.bits[t / 64] |= 1ull << (t % 64);
  for (double s : p.scalars) p.scalar_sq += s * s;
  for (auto w : p.bits) p.popcount += std::popcount(w);
  return p;
}

std::vector<PackedVector> pack_vectors(std::span<const FeatureVector> vectors) {
  std::vector<PackedVector> packed;
  packed.reserve(vectors.size());
  for (const auto& v : vectors) packed.push_back(PackedVector::from(v));
  return packed;
}

DistanceTriple distance_triple(const PackedVector& a, const PackedVector& b) {
  double diff_sq = 0, diff_abs = 0, dot = 0;
  for (std::size_t i = 0; i < kScalarFeatures; ++i) {
    const double d = a.scalars[i] - b.scalars[i];
    diff_sq += d * d;
    diff_abs += std::abs(d);
    dot += a.scalars[i] * b.scalars[i];
  }
  // bitmap coordinates are 0/1: each differing bit contributes exactly 1 to
  // both |x-y| and (x-y)^2, each shared set bit contributes 1 to the dot
  int xor_bits = 0, and_bits = 0;
  for (std::size_t w = 0; w < 4; ++w) {
    xor_bits += std::popcount(a.bits[w] ^ b.bits[w]);
    and_bits += std::popcount(a.bits[w] & b.bits[w]);
  }
  DistanceTriple t;
  t.euclidean = std::sqrt(diff_sq + xor_bits);
  t.manhattan = diff_abs + xor_bits;
  t.cosine = cosine_from_parts(dot + and_bits, a.scalar_sq + a.popcount,
                               b.scalar_sq + b.popcount);
  return t;
}

double euclidean(const FeatureVector& x, const FeatureVector& y) {
  return distance_triple(PackedVector::from(x), PackedVector::from(y)).euclidean;
}
double manhattan(const FeatureVector& x, const FeatureVector& y) {
  return distance_triple(PackedVector::from(x), PackedVector::from(y)).manhattan;
}
double cosine(const FeatureVector& x, const FeatureVector& y) {
  return distance_triple(PackedVector::from(x), PackedVector::from(y)).cosine;
}

// ---- matrices ----

DistanceMatrix pairwise_matrix(std::span<const PackedVector> packed, MetricTag tag) {
  if (tag == MetricTag::combined)
    throw ContractViolation("pairwise_matrix: combined is derived, not computed directly");
  const std::size_t n = packed.size();
  DistanceMatrix m = DistanceMatrix::zeros(n, tag);
  // workers own disjoint rows; each fills its upper triangle part
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const DistanceTriple t = distance_triple(packed[i], packed[j]);
        const double v = tag == MetricTag::euclidean ? t.euclidean
                         : tag == MetricTag::manhattan ? t.manhattan
                                                       : t.cosine;
        m.values[i * n + j] = static_cast<float>(v);
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m.values[i * n + j] = m.values[j * n + i];
  return m;
}

DistanceMatrix pairwise_matrix(std::span<const FeatureVector> vectors, MetricTag tag) {
  const auto packed = pack_vectors(vectors);
  return pairwise_matrix(packed, tag);
}

DistanceMatrix combined_matrix(const DistanceMatrix& a, const DistanceMatrix& b,
                               const DistanceMatrix& c) {
  const DistanceMatrix* by_tag[3] = {nullptr, nullptr, nullptr};
  for (const DistanceMatrix* m : {&a, &b, &c}) {
    const auto tag = static_cast<std::uint32_t>(m->tag);
    if (tag > 2 || by_tag[tag] != nullptr)
      throw ContractViolation("combined_matrix: inputs must be exactly {euclidean, manhattan, cosine}");
    by_tag[tag] = m;
  }
  const std::size_t n = a.n;
  if (b.n != n || c.n != n) throw ContractViolation("combined_matrix: size mismatch");

  // rescale each matrix by its own maximum so all three contribute on [0,1]
  double inv[3];
  for (int k = 0; k < 3; ++k) {
    const float mx = by_tag[k]->max_value();
    inv[k] = mx > 0 ? 1.0 / mx : 0.0;
  }
  DistanceMatrix out = DistanceMatrix::zeros(n, MetricTag::combined);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double v = (by_tag[0]->values[i] * inv[0] + by_tag[1]->values[i] * inv[1] +
                      by_tag[2]->values[i] * inv[2]) /
                     3.0;
    out.values[i] = static_cast<float>(v);
  }
  return out;
}

// ---- matching ----

namespace {

struct EligibilityIndex {
  std::vector<bool> eligible;
  std::size_t eligible_count = 0;
};

EligibilityIndex eligibility(std::span<const std::string> device_ids) {
  std::unordered_map<std::string, std::size_t> dev_counts;
  for (const auto& d : device_ids)
    if (device_known(d)) dev_counts[d]++;
  EligibilityIndex idx;
  idx.eligible.resize(device_ids.size(), false);
  for (std::size_t i = 0; i < device_ids.size(); ++i) {
    if (device_known(device_ids[i]) && dev_counts[device_ids[i]] >= 2) {
      idx.eligible[i] = true;
      idx.eligible_count++;
    }
  }
  return idx;
}

}  // namespace

MatchResult finish_match(std::vector<std::size_t> predicted,
                         std::span<const std::string> device_ids) {
  const auto idx = eligibility(device_ids);
  MatchResult r;
  r.predicted = std::move(predicted);
  r.eligible = idx.eligible;
  r.eligible_count = idx.eligible_count;
  if (r.eligible_count == 0) throw EvalError("matching: no eligible fingerprints");
  r.correct.resize(device_ids.size(), false);
  for (std::size_t i = 0; i < device_ids.size(); ++i) {
    if (!r.eligible[i]) continue;
    const auto& pred_dev = device_ids[r.predicted[i]];
    if (device_known(pred_dev) && pred_dev == device_ids[i]) {
      r.correct[i] = true;
      r.correct_count++;
    }
  }
  r.accuracy = static_cast<double>(r.correct_count) / static_cast<double>(r.eligible_count);
  return r;
}

MatchResult nearest_neighbor_match(const DistanceMatrix& matrix,
                                   std::span<const std::string> device_ids) {
  const std::size_t n = matrix.n;
  if (n < 2) throw ContractViolation("nearest_neighbor_match: need at least 2 fingerprints");
  if (device_ids.size() != n)
    throw ContractViolation("nearest_neighbor_match: label/matrix size mismatch");

  std::vector<std::size_t> predicted(n, 0);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t best = n;
      float best_d = std::numeric_limits<float>::infinity();
      const float* row = matrix.values.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (row[j] < best_d) {  // strict: ties keep the lowest index
          best_d = row[j];
          best = j;
        }
      }
      predicted[i] = best;
    }
  });
  return finish_match(std::move(predicted), device_ids);
}

MatchResult match_blocked(std::span<const PackedVector> packed,
                          std::span<const std::string> device_ids) {
  const std::size_t n = packed.size();
  if (n < 2) throw ContractViolation("match_blocked: need at least 2 fingerprints");
  if (device_ids.size() != n)
    throw ContractViolation("match_blocked: label/vector size mismatch");

  // pass 1: per-metric maxima (the combined matrix rescales by them)
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, 64));
  std::vector<std::array<double, 3>> local_max(workers, {0, 0, 0});
  {
    // interleave rows over a fixed worker count so maxima stay deterministic
    parallel_chunks(workers, [&](std::size_t wb, std::size_t we) {
      for (std::size_t w = wb; w < we; ++w) {
        auto& mx = local_max[w];
        for (std::size_t i = w; i < n; i += workers) {
          for (std::size_t j = i + 1; j < n; ++j) {
            const DistanceTriple t = distance_triple(packed[i], packed[j]);
            mx[0] = std::max(mx[0], t.euclidean);
            mx[1] = std::max(mx[1], t.manhattan);
            mx[2] = std::max(mx[2], t.cosine);
          }
        }
      }
    });
  }
  double inv[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    double mx = 0;
    for (const auto& lm : local_max) mx = std::max(mx, lm[k]);
    // match the dense path bit-for-bit: it rescales float32 entries by
    // 1/float32(max)
    const float mxf = static_cast<float>(mx);
    inv[k] = mxf > 0 ? 1.0 / mxf : 0.0;
  }

  // pass 2: per-row argmin of the combined distance
  std::vector<std::size_t> predicted(n, 0);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t best = n;
      float best_d = std::numeric_limits<float>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const DistanceTriple t = distance_triple(packed[i], packed[j]);
        // round each metric to float32 first, exactly like the dense path
        const float fe = static_cast<float>(t.euclidean);
        const float fm = static_cast<float>(t.manhattan);
        const float fc = static_cast<float>(t.cosine);
        const float d = static_cast<float>((fe * inv[0] + fm * inv[1] + fc * inv[2]) / 3.0);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      predicted[i] = best;
    }
  });
  return finish_match(std::move(predicted), device_ids);
}

MatchResult match_blocked(std::span<const FeatureVector> vectors,
                          std::span<const std::string> device_ids) {
  const auto packed = pack_vectors(vectors);
  return match_blocked(std::span<const PackedVector>(packed), device_ids);
}

// ---- binary dump ----

void write_matrix_file(const std::string& path, const DistanceMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot open for writing: " + path);
  const char magic[4] = {'F', 'P', 'M', '1'};
  out.write(magic, 4);
  const std::uint32_t n32 = static_cast<std::uint32_t>(m.n);
  const std::uint32_t tag = static_cast<std::uint32_t>(m.tag);
  const std::uint32_t reserved = 0;
  out.write(reinterpret_cast<const char*>(&n32), 4);
  out.write(reinterpret_cast<const char*>(&tag), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!out) throw StorageError("write failed: " + path);
}

DistanceMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open matrix file: " + path);
  char magic[4];
  std::uint32_t n32 = 0, tag = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&n32), 4);
  in.read(reinterpret_cast<char*>(&tag), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, "FPM1", 4) != 0)
    throw FormatError("bad matrix file header: " + path);
  if (tag > 3) throw FormatError("bad matrix metric tag: " + path);
  DistanceMatrix m;
  m.n = n32;
  m.tag = static_cast<MetricTag>(tag);
  m.values.resize(static_cast<std::size_t>(n32) * n32);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw FormatError("truncated matrix file: " + path);
  return m;
}

}  // namespace fsmfp
