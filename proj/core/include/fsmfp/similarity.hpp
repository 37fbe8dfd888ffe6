#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsmfp/featurize.hpp"

namespace fsmfp {

enum class MetricTag : std::uint32_t { euclidean = 0, manhattan = 1, cosine = 2, combined = 3 };

const char* metric_name(MetricTag tag);

/// Symmetric n x n dissimilarity matrix, zero diagonal. Single-precision
/// storage, double-precision accumulation.
struct DistanceMatrix {
  std::size_t n = 0;
  MetricTag tag = MetricTag::euclidean;
  std::vector<float> values;  // row-major, n*n

  static DistanceMatrix zeros(std::size_t n, MetricTag tag) {
    return {n, tag, std::vector<float>(n * n, 0.0f)};
  }
  float at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  void set(std::size_t i, std::size_t j, float v) { values[i * n + j] = v; }
  float max_value() const;
};

// Reference distances over raw coordinate spans (same length required).
double euclidean(std::span<const double> x, std::span<const double> y);
double manhattan(std::span<const double> x, std::span<const double> y);
double cosine(std::span<const double> x, std::span<const double> y);

// Distances over the full 263-dim feature embedding.
double euclidean(const FeatureVector& x, const FeatureVector& y);
double manhattan(const FeatureVector& x, const FeatureVector& y);
double cosine(const FeatureVector& x, const FeatureVector& y);

/// The three pairwise distances of one vector pair computed in a single pass
/// (bitmap handled with popcounts; exact, since bitmap coordinates are 0/1).
struct DistanceTriple {
  double euclidean = 0, manhattan = 0, cosine = 0;
};

/// Feature vector packed for fast pairwise scans.
struct PackedVector {
  std::array<double, kScalarFeatures> scalars{};
  std::array<std::uint64_t, 4> bits{};
  double scalar_sq = 0;  // sum of squared scalars
  int popcount = 0;

  static PackedVector from(const FeatureVector& v);
};

DistanceTriple distance_triple(const PackedVector& a, const PackedVector& b);

std::vector<PackedVector> pack_vectors(std::span<const FeatureVector> vectors);

/// Full pairwise matrix for one metric, parallel over row blocks.
DistanceMatrix pairwise_matrix(std::span<const FeatureVector> vectors, MetricTag tag);
DistanceMatrix pairwise_matrix(std::span<const PackedVector> packed, MetricTag tag);

/// Rescales each input by its own maximum entry (an all-zero matrix passes
/// through) and averages the three entrywise. Inputs must be the euclidean,
/// manhattan and cosine matrices, any order, equal n.
DistanceMatrix combined_matrix(const DistanceMatrix& a, const DistanceMatrix& b,
                               const DistanceMatrix& c);

struct MatchResult {
  std::vector<std::size_t> predicted;  // argmin over j != i, ties to lowest index
  std::vector<bool> eligible;          // known device with >= 2 fingerprints
  std::vector<bool> correct;
  std::size_t eligible_count = 0;
  std::size_t correct_count = 0;
  double accuracy = 0.0;  // correct / eligible
};

/// Nearest-neighbor matching over a distance matrix. device_ids align with
/// matrix rows; fingerprints of unknown or singleton devices are excluded
/// from the accuracy denominator but still serve as candidates.
MatchResult nearest_neighbor_match(const DistanceMatrix& matrix,
                                   std::span<const std::string> device_ids);

/// Assembles a MatchResult (eligibility, correctness, accuracy) from
/// precomputed predictions; used by matchers that bypass distance matrices.
MatchResult finish_match(std::vector<std::size_t> predicted,
                         std::span<const std::string> device_ids);

/// Blocked matching: combined-distance nearest neighbor without
/// materializing any n x n matrix (two passes: per-metric maxima, then
/// argmin). Produces the same predictions as the dense path.
MatchResult match_blocked(std::span<const FeatureVector> vectors,
                          std::span<const std::string> device_ids);
MatchResult match_blocked(std::span<const PackedVector> packed,
                          std::span<const std::string> device_ids);

/// Binary dump: 16-byte header (magic "FPM1", u32 n, u32 metric tag, u32
/// reserved), then n*n little-endian float32 values, row-major.
void write_matrix_file(const std::string& path, const DistanceMatrix& m);
DistanceMatrix read_matrix_file(const std::string& path);

}  // namespace fsmfp
