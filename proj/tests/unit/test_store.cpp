#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fsmfp/errors.hpp"
#include "fsmfp/evalharness.hpp"
#include "fsmfp/rand.hpp"
#include "fsmfp/store.hpp"
#include "support.hpp"

using namespace fsmfp;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct PipelineFixture {
  std::vector<ManagementFrame> frames;
  std::vector<Burst> bursts;
  std::vector<BurstGroup> groups;
  std::vector<Fsm> fsms;
  std::vector<FeatureVector> features;
};

PipelineFixture make_fixture() {
  auto p = testsupport::probe_profile("p");
  const auto trace = generate_trace(
      std::vector<std::pair<VendorProfile, std::size_t>>{{p, 3}}, 300.0, 15);
  PipelineFixture fx;
  fx.frames = trace.frames;
  fx.bursts = segment_bursts(fx.frames);
  const auto devmap = device_map_from_truth(trace.frames, trace.truth);
  auto pipe = fingerprint_pipeline(fx.bursts, 2, devmap, 15, true);
  fx.groups = std::move(pipe.groups);
  fx.fsms = std::move(pipe.fsms);
  fx.features = std::move(pipe.features);
  return fx;
}

const char* tmp(const char* name) {
  static std::string path;
  path = std::string("/tmp/fsmfp_store_") + name;
  return path.c_str();
}

}  // namespace

TEST_SUITE("store") {

TEST_CASE("zero records still produce a valid header-only file") {
  store::write_record_file(tmp("empty.v1"), "frames.v1", "seed=0", {});
  const auto file = store::read_record_file(tmp("empty.v1"), "frames.v1");
  CHECK(file.header.schema_tag == "frames.v1");
  CHECK(file.lines.empty());
  CHECK(store::read_frames(tmp("empty.v1")).empty());
}

TEST_CASE("frames round-trip and writes are deterministic") {
  const auto fx = make_fixture();
  store::write_frames(tmp("frames_a.v1"), fx.frames, "seed=15");
  store::write_frames(tmp("frames_b.v1"), fx.frames, "seed=15");
  CHECK(slurp(tmp("frames_a.v1")) == slurp(tmp("frames_b.v1")));

  const auto back = store::read_frames(tmp("frames_a.v1"));
  REQUIRE(back.size() == fx.frames.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].src == fx.frames[i].src);
    CHECK(back[i].dst == fx.frames[i].dst);
    CHECK(back[i].subtype == fx.frames[i].subtype);
    CHECK(back[i].seq_num == fx.frames[i].seq_num);
    CHECK(back[i].ies == fx.frames[i].ies);
    // floats are stored at 9 significant digits, so round-trip error is
    // bounded by 5e-9 relative
    CHECK(back[i].timestamp ==
          doctest::Approx(fx.frames[i].timestamp).epsilon(1e-8));
  }
  // serialization is a fixpoint: write(read(write(x))) == write(x)
  store::write_frames(tmp("frames_c.v1"), back, "seed=15");
  CHECK(slurp(tmp("frames_c.v1")) == slurp(tmp("frames_a.v1")));
}

TEST_CASE("bursts and groups round-trip through their reference encoding") {
  const auto fx = make_fixture();
  store::write_bursts(tmp("bursts.v1"), fx.bursts, "");
  const auto bursts = store::read_bursts(tmp("bursts.v1"), fx.frames);
  REQUIRE(bursts.size() == fx.bursts.size());
  for (std::size_t i = 0; i < bursts.size(); ++i) {
    CHECK(bursts[i].mac == fx.bursts[i].mac);
    CHECK(bursts[i].ordinals == fx.bursts[i].ordinals);
    CHECK(bursts[i].frames.size() == fx.bursts[i].frames.size());
    CHECK(bursts[i].index_within_mac == fx.bursts[i].index_within_mac);
  }

  store::write_groups(tmp("groups.v1"), fx.groups, "");
  const auto groups = store::read_groups(tmp("groups.v1"), bursts);
  REQUIRE(groups.size() == fx.groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CHECK(groups[i].pseudo_id == fx.groups[i].pseudo_id);
    CHECK(groups[i].device_id == fx.groups[i].device_id);
    CHECK(groups[i].partial == fx.groups[i].partial);
    CHECK(groups[i].bursts.size() == fx.groups[i].bursts.size());
  }
}

TEST_CASE("fsms round-trip with states as SUBTYPE/B|U strings") {
  const auto fx = make_fixture();
  store::write_fsms(tmp("fsm.v1"), fx.fsms, "");
  const auto fsms = store::read_fsms(tmp("fsm.v1"));
  REQUIRE(fsms.size() == fx.fsms.size());
  for (std::size_t i = 0; i < fsms.size(); ++i) {
    CHECK(fsms[i].states == fx.fsms[i].states);
    CHECK(fsms[i].transitions == fx.fsms[i].transitions);
    CHECK(fsms[i].initial == fx.fsms[i].initial);
    CHECK(fsms[i].frame_count == fx.fsms[i].frame_count);
    CHECK(fsms[i].burst_count == fx.fsms[i].burst_count);
    CHECK(fsms[i].seq_span == fx.fsms[i].seq_span);
  }
  const auto raw = store::read_record_file(tmp("fsm.v1"), "fsm.v1");
  REQUIRE(!raw.lines.empty());
  CHECK(raw.lines[0].find("ProbeRequest/B") != std::string::npos);
}

TEST_CASE("features round-trip including the bitmap hex and csv export") {
  const auto fx = make_fixture();
  store::write_features(tmp("features.v1"), fx.features, "");
  const auto feats = store::read_features(tmp("features.v1"));
  REQUIRE(feats.size() == fx.features.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    CHECK(feats[i].fingerprint_id == fx.features[i].fingerprint_id);
    CHECK(feats[i].device_id == fx.features[i].device_id);
    CHECK(feats[i].ie_bitmap == fx.features[i].ie_bitmap);
    CHECK(feats[i].normalized == fx.features[i].normalized);
    const auto a = feats[i].scalars();
    const auto b = fx.features[i].scalars();
    for (std::size_t k = 0; k < a.size(); ++k)
      CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-8));
  }

  store::write_features_csv(tmp("features.csv"), fx.features);
  const auto csv = slurp(tmp("features.csv"));
  CHECK(csv.rfind("pseudo_id,device_id,x1", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(fx.features.size()) + 1);
}

TEST_CASE("models round-trip with identical predictions") {
  std::vector<PairSample> pairs;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 60; ++k) {
    PairSample s;
    s.label = k % 2;
    s.dev_i = "a";
    s.dev_j = s.label ? "a" : "b";
    s.f_euclidean = uniform_double(rng, 0, 1) + (s.label ? 0 : 1);
    s.f_cosine = uniform_double(rng, 0, 1) + (s.label ? 0 : 1);
    s.f_manhattan = uniform_double(rng, 0, 1) + (s.label ? 0 : 1);
    pairs.push_back(s);
  }
  for (const auto kind : {ModelKind::logistic_regression, ModelKind::random_forest}) {
    const auto model = train(kind, pairs, {}, 77);
    store::write_model(tmp("model.v1"), model, "seed=77");
    const auto back = store::read_model(tmp("model.v1"));
    CHECK(back.kind == model.kind);
    CHECK(back.train_devices == model.train_devices);
    for (int k = 0; k < 40; ++k) {
      const std::array<double, 3> f{uniform_double(rng, 0, 2), uniform_double(rng, 0, 2),
                                    uniform_double(rng, 0, 2)};
      CHECK(back.predict(f) == doctest::Approx(model.predict(f)).epsilon(1e-6));
    }
  }
}

TEST_CASE("schema mismatches name both tags") {
  const auto fx = make_fixture();
  store::write_frames(tmp("tagged.v1"), fx.frames, "");
  try {
    store::read_record_file(tmp("tagged.v1"), "bursts.v1");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    CHECK(what.find("bursts.v1") != std::string::npos);
    CHECK(what.find("frames.v1") != std::string::npos);
  }
}

TEST_CASE("malformed lines report their line number") {
  {
    std::ofstream out(tmp("broken.v1"), std::ios::trunc);
    out << "frames.v1 fsmfp/0.1.0 -\n";
    out << R"({"t":0,"src":"02:00:00:00:00:01","dst":"ff:ff:ff:ff:ff:ff","subtype":"ProbeRequest","seq":1,"ies":[],"cap":"x"})"
        << "\n";
    out << "{\"t\":0,\"src\":\"02:00\n";  // truncated record
  }
  try {
    store::read_frames(tmp("broken.v1"));
    FAIL("expected RecordParseError");
  } catch (const RecordParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("fuzzed record bodies never crash the reader") {
  std::mt19937_64 rng(91);
  for (int iter = 0; iter < 200; ++iter) {
    std::ofstream out(tmp("fuzz.v1"), std::ios::trunc);
    out << "features.v1 fsmfp/0.1.0 -\n";
    const std::size_t lines = bounded_uint(rng, 5) + 1;
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t len = bounded_uint(rng, 80);
      std::string line;
      for (std::size_t k = 0; k < len; ++k)
        line.push_back(static_cast<char>(32 + bounded_uint(rng, 95)));
      out << line << "\n";
    }
    out.close();
    try {
      store::read_features(tmp("fuzz.v1"));
    } catch (const FormatError&) {
      // parse/schema errors are the expected failure mode
    }
  }
}

TEST_CASE("format_double renders 9 significant digits") {
  CHECK(store::format_double(0.5) == "0.5");
  CHECK(store::format_double(1.0 / 3.0) == "0.333333333");
  CHECK(store::format_double(12345678.9) == "12345678.9");
}

}  // TEST_SUITE
