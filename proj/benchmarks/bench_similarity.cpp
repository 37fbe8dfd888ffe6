#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fsmfp/rand.hpp"
#include "fsmfp/similarity.hpp"

using namespace fsmfp;

namespace {

std::vector<FeatureVector> random_vectors(std::size_t n, int devices) {
  std::mt19937_64 rng(42);
  std::vector<FeatureVector> vecs;
  vecs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v;
    v.device_id = "d" + std::to_string(i % static_cast<std::size_t>(devices));
    v.x1_states = uniform_double(rng, -2, 2);
    v.x2_transitions = uniform_double(rng, -2, 2);
    v.x3_self_transitions = uniform_double(rng, -2, 2);
    v.x4_entropy = uniform_double(rng, -2, 2);
    v.x5_transition_rate = uniform_double(rng, -2, 2);
    v.x6_time_gap = uniform_double(rng, -2, 2);
    v.x7_seq_gap = uniform_double(rng, -2, 2);
    for (int k = 0; k < 16; ++k) v.ie_bitmap.set(bounded_uint(rng, 256));
    v.normalized = true;
    vecs.push_back(std::move(v));
  }
  return vecs;
}

}  // namespace

static void BM_PairwiseMatrix(benchmark::State& state) {
  const auto vecs = random_vectors(static_cast<std::size_t>(state.range(0)), 64);
  const auto packed = pack_vectors(vecs);
  for (auto _ : state) {
    auto m = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::euclidean);
    benchmark::DoNotOptimize(m.values.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PairwiseMatrix)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

static void BM_CombinedMatchDense(benchmark::State& state) {
  const auto vecs = random_vectors(static_cast<std::size_t>(state.range(0)), 64);
  std::vector<std::string> devs;
  for (const auto& v : vecs) devs.push_back(v.device_id);
  const auto packed = pack_vectors(vecs);
  for (auto _ : state) {
    const auto e = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::euclidean);
    const auto m = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::manhattan);
    const auto c = pairwise_matrix(std::span<const PackedVector>(packed), MetricTag::cosine);
    const auto r = nearest_neighbor_match(combined_matrix(e, m, c), devs);
    benchmark::DoNotOptimize(r.accuracy);
  }
}
BENCHMARK(BM_CombinedMatchDense)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_CombinedMatchBlocked(benchmark::State& state) {
  const auto vecs = random_vectors(static_cast<std::size_t>(state.range(0)), 64);
  std::vector<std::string> devs;
  for (const auto& v : vecs) devs.push_back(v.device_id);
  const auto packed = pack_vectors(vecs);
  for (auto _ : state) {
    const auto r = match_blocked(std::span<const PackedVector>(packed), devs);
    benchmark::DoNotOptimize(r.accuracy);
  }
}
BENCHMARK(BM_CombinedMatchBlocked)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_DistanceTriple(benchmark::State& state) {
  const auto vecs = random_vectors(2, 2);
  const auto packed = pack_vectors(vecs);
  for (auto _ : state) {
    const auto t = distance_triple(packed[0], packed[1]);
    benchmark::DoNotOptimize(t.euclidean);
  }
}
BENCHMARK(BM_DistanceTriple);
