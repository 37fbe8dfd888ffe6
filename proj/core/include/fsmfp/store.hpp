#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsmfp/burstseg.hpp"
#include "fsmfp/featurize.hpp"
#include "fsmfp/frame.hpp"
#include "fsmfp/fsm.hpp"
#include "fsmfp/learn.hpp"

namespace fsmfp {
namespace store {

// Versioned newline-delimited record files shared by all stages. First line
// is a header: "<schema_tag> <producer> <provenance...>"; each body line is
// one record. Writes are atomic (temp file + rename) and deterministic
// (fixed field order, floats at 9 significant digits).

struct RecordHeader {
  std::string schema_tag;
  std::string producer;
  std::string provenance;
};

struct RawRecordFile {
  RecordHeader header;
  std::vector<std::string> lines;
};

void write_record_file(const std::string& path, const std::string& schema_tag,
                       const std::string& provenance, std::span<const std::string> lines);
RawRecordFile read_record_file(const std::string& path, const std::string& expected_tag);

/// "%.9g" rendering used for every float field.
std::string format_double(double v);

// frames.v1 — one management frame per line, MACs as lowercase colon-hex.
void write_frames(const std::string& path, std::span<const ManagementFrame> frames,
                  const std::string& provenance);
std::vector<ManagementFrame> read_frames(const std::string& path);

// bursts.v1 — bursts referencing frames by (capture_id, ordinal).
void write_bursts(const std::string& path, std::span<const Burst> bursts,
                  const std::string& provenance);
std::vector<Burst> read_bursts(const std::string& path,
                               std::span<const ManagementFrame> frames);

// groups.v1 — burst groups referencing bursts by (capture_id, mac, index).
void write_groups(const std::string& path, std::span<const BurstGroup> groups,
                  const std::string& provenance);
std::vector<BurstGroup> read_groups(const std::string& path, std::span<const Burst> bursts);

// fsm.v1 — states as "SUBTYPE/B|U" strings, transitions as (from, to, count).
void write_fsms(const std::string& path, std::span<const Fsm> fsms,
                const std::string& provenance);
std::vector<Fsm> read_fsms(const std::string& path);

// features.v1 — scalars plus the bitmap as 64-char hex.
void write_features(const std::string& path, std::span<const FeatureVector> vectors,
                    const std::string& provenance);
std::vector<FeatureVector> read_features(const std::string& path);

/// Flat CSV export: pseudo_id, device_id, x1..x7, ie_bitmap hex.
void write_features_csv(const std::string& path, std::span<const FeatureVector> vectors);

// model.v1 — kind, hyperparameters, parameters.
void write_model(const std::string& path, const ClassifierModel& model,
                 const std::string& provenance);
ClassifierModel read_model(const std::string& path);

}  // namespace store
}  // namespace fsmfp
