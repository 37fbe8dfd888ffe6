#include <benchmark/benchmark.h>

#include "fsmfp/evalharness.hpp"
#include "fsmfp/ingest.hpp"
#include "fsmfp/synthgen.hpp"

using namespace fsmfp;

namespace {

std::vector<std::pair<VendorProfile, std::size_t>> bench_profiles() {
  VendorProfile p;
  p.name = "bench";
  p.states = {FsmState{FrameSubtype::ProbeRequest, DstClass::Broadcast},
              FsmState{FrameSubtype::Authentication, DstClass::Unicast}};
  p.transition_probs = {{0.8, 0.2}, {0.5, 0.5}};
  p.initial_state = p.states[0];
  p.frames_per_burst = Dist::uniform(4, 10);
  p.intra_gap = Dist::uniform(0.01, 0.2);
  p.inter_gap = Dist::uniform(2, 10);
  p.bursts_per_device = Dist::constant(20);
  p.seq_increment = Dist::uniform(1, 4);
  p.ie_tags = {{0, 1.0}, {1, 0.9}, {50, 0.7}, {221, 0.5}};
  p.device_jitter = 0.3;
  return {{p, 40}};
}

}  // namespace

static void BM_GenerateTrace(benchmark::State& state) {
  const auto profiles = bench_profiles();
  for (auto _ : state) {
    const auto trace = generate_trace(profiles, 3000.0, 7);
    benchmark::DoNotOptimize(trace.frames.size());
  }
}
BENCHMARK(BM_GenerateTrace)->Unit(benchmark::kMillisecond);

static void BM_ParseCapture(benchmark::State& state) {
  const auto trace = generate_trace(bench_profiles(), 3000.0, 7);
  const auto bytes = write_capture(trace.frames);
  for (auto _ : state) {
    const auto parsed = parse_capture(bytes, "bench");
    benchmark::DoNotOptimize(parsed.frames.size());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_ParseCapture)->Unit(benchmark::kMillisecond);

static void BM_SegmentBursts(benchmark::State& state) {
  const auto trace = generate_trace(bench_profiles(), 3000.0, 7);
  for (auto _ : state) {
    const auto bursts = segment_bursts(trace.frames);
    benchmark::DoNotOptimize(bursts.size());
  }
}
BENCHMARK(BM_SegmentBursts)->Unit(benchmark::kMillisecond);

static void BM_FingerprintPipeline(benchmark::State& state) {
  const auto trace = generate_trace(bench_profiles(), 3000.0, 7);
  const auto bursts = segment_bursts(trace.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  for (auto _ : state) {
    const auto pipe = fingerprint_pipeline(bursts, static_cast<std::size_t>(state.range(0)),
                                           devmap, 7, false);
    benchmark::DoNotOptimize(pipe.features.size());
  }
}
BENCHMARK(BM_FingerprintPipeline)->Arg(1)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);
