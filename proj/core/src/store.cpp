#include "fsmfp/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fsmfp/errors.hpp"
#include "fsmfp/version.hpp"

namespace fsmfp {
namespace store {

namespace {

using nlohmann::json;

std::string hex_encode(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

std::vector<std::uint8_t> hex_decode(const std::string& hex, std::size_t lineno) {
  if (hex.size() % 2 != 0) throw RecordParseError(lineno, "odd-length hex string");
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw RecordParseError(lineno, "non-hex character");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[i * 2]) << 4 | nibble(hex[i * 2 + 1]));
  return out;
}

json parse_line(const std::string& line, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw RecordParseError(lineno, "invalid json record");
  if (!j.is_object()) throw RecordParseError(lineno, "record is not an object");
  return j;
}

// field accessors that convert nlohmann's type errors into line-tagged errors
template <typename T>
T field(const json& j, const char* key, std::size_t lineno) {
  const auto it = j.find(key);
  if (it == j.end()) throw RecordParseError(lineno, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw RecordParseError(lineno, std::string("bad type for field '") + key + "'");
  }
}

MacAddress mac_field(const json& j, const char* key, std::size_t lineno) {
  const auto text = field<std::string>(j, key, lineno);
  const auto mac = MacAddress::parse(text);
  if (!mac) throw RecordParseError(lineno, std::string("bad mac in '") + key + "'");
  return *mac;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_record_file(const std::string& path, const std::string& schema_tag,
                       const std::string& provenance, std::span<const std::string> lines) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open for writing: " + tmp.string());
    out << schema_tag << ' ' << kProducerVersion << ' '
        << (provenance.empty() ? "-" : provenance) << '\n';
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    if (!out) throw StorageError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw StorageError("rename failed: " + target.string() + ": " + ec.message());
}

RawRecordFile read_record_file(const std::string& path, const std::string& expected_tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open record file: " + path);
  RawRecordFile file;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty record file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream hdr(line);
    hdr >> file.header.schema_tag >> file.header.producer;
    std::getline(hdr, file.header.provenance);
    if (!file.header.provenance.empty() && file.header.provenance.front() == ' ')
      file.header.provenance.erase(0, 1);
  }
  if (file.header.schema_tag != expected_tag)
    throw SchemaError(expected_tag, file.header.schema_tag);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    file.lines.push_back(line);
  }
  return file;
}

// ---- frames.v1 ----

void write_frames(const std::string& path, std::span<const ManagementFrame> frames,
                  const std::string& provenance) {
  std::vector<std::string> lines;
  lines.reserve(frames.size());
  for (const auto& f : frames) {
    std::string ies = "[";
    for (std::size_t i = 0; i < f.ies.size(); ++i) {
      if (i) ies += ',';
      ies += "{\"tag\":" + std::to_string(f.ies[i].tag) + ",\"body\":\"" +
             hex_encode(f.ies[i].body) + "\"}";
    }
    ies += ']';
    lines.push_back("{\"t\":" + format_double(f.timestamp) + ",\"src\":\"" + f.src.to_string() +
                    "\",\"dst\":\"" + f.dst.to_string() + "\",\"subtype\":\"" +
                    subtype_name(f.subtype) + "\",\"seq\":" + std::to_string(f.seq_num) +
                    ",\"ies\":" + ies + ",\"cap\":\"" + f.capture_id + "\"}");
  }
  write_record_file(path, "frames.v1", provenance, lines);
}

std::vector<ManagementFrame> read_frames(const std::string& path) {
  const auto file = read_record_file(path, "frames.v1");
  std::vector<ManagementFrame> frames;
  frames.reserve(file.lines.size());
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;  // header is line 1
    const json j = parse_line(file.lines[li], lineno);
    ManagementFrame f;
    f.timestamp = field<double>(j, "t", lineno);
    if (f.timestamp < 0) throw RecordParseError(lineno, "negative timestamp");
    f.src = mac_field(j, "src", lineno);
    f.dst = mac_field(j, "dst", lineno);
    const auto subtype = subtype_from_name(field<std::string>(j, "subtype", lineno));
    if (!subtype) throw RecordParseError(lineno, "unknown subtype");
    f.subtype = *subtype;
    const auto seq = field<std::int64_t>(j, "seq", lineno);
    if (seq < 0 || seq > 4095) throw RecordParseError(lineno, "seq out of 0..4095");
    f.seq_num = static_cast<std::uint16_t>(seq);
    const auto it = j.find("ies");
    if (it == j.end() || !it->is_array()) throw RecordParseError(lineno, "missing ies array");
    for (const auto& je : *it) {
      if (!je.is_object()) throw RecordParseError(lineno, "bad ie entry");
      InformationElement ie;
      const auto tag = field<std::int64_t>(je, "tag", lineno);
      if (tag < 0 || tag > 255) throw RecordParseError(lineno, "ie tag out of 0..255");
      ie.tag = static_cast<std::uint8_t>(tag);
      ie.body = hex_decode(field<std::string>(je, "body", lineno), lineno);
      f.ies.push_back(std::move(ie));
    }
    f.capture_id = field<std::string>(j, "cap", lineno);
    frames.push_back(std::move(f));
  }
  return frames;
}

// ---- bursts.v1 ----

void write_bursts(const std::string& path, std::span<const Burst> bursts,
                  const std::string& provenance) {
  std::vector<std::string> lines;
  lines.reserve(bursts.size());
  for (const auto& b : bursts) {
    std::string ords = "[";
    for (std::size_t i = 0; i < b.ordinals.size(); ++i) {
      if (i) ords += ',';
      ords += std::to_string(b.ordinals[i]);
    }
    ords += ']';
    lines.push_back("{\"cap\":\"" + b.capture_id + "\",\"mac\":\"" + b.mac.to_string() +
                    "\",\"idx\":" + std::to_string(b.index_within_mac) +
                    ",\"start\":" + format_double(b.start_time) +
                    ",\"end\":" + format_double(b.end_time) + ",\"frames\":" + ords + "}");
  }
  write_record_file(path, "bursts.v1", provenance, lines);
}

std::vector<Burst> read_bursts(const std::string& path,
                               std::span<const ManagementFrame> frames) {
  const auto file = read_record_file(path, "bursts.v1");
  std::vector<Burst> bursts;
  bursts.reserve(file.lines.size());
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;
    const json j = parse_line(file.lines[li], lineno);
    Burst b;
    b.capture_id = field<std::string>(j, "cap", lineno);
    b.mac = mac_field(j, "mac", lineno);
    b.index_within_mac = field<std::uint64_t>(j, "idx", lineno);
    b.start_time = field<double>(j, "start", lineno);
    b.end_time = field<double>(j, "end", lineno);
    const auto it = j.find("frames");
    if (it == j.end() || !it->is_array() || it->empty())
      throw RecordParseError(lineno, "burst needs a nonempty frames array");
    for (const auto& jo : *it) {
      if (!jo.is_number_unsigned()) throw RecordParseError(lineno, "bad frame ordinal");
      const auto ordinal = jo.get<std::uint64_t>();
      if (ordinal >= frames.size())
        throw RecordParseError(lineno, "frame ordinal out of range");
      b.ordinals.push_back(ordinal);
      b.frames.push_back(frames[ordinal]);
    }
    bursts.push_back(std::move(b));
  }
  return bursts;
}

// ---- groups.v1 ----

void write_groups(const std::string& path, std::span<const BurstGroup> groups,
                  const std::string& provenance) {
  std::vector<std::string> lines;
  lines.reserve(groups.size());
  for (const auto& g : groups) {
    const std::string cap = g.bursts.empty() ? "" : g.bursts.front().capture_id;
    std::string refs = "[";
    for (std::size_t i = 0; i < g.bursts.size(); ++i) {
      if (i) refs += ',';
      refs += "[\"" + g.bursts[i].mac.to_string() + "\"," +
              std::to_string(g.bursts[i].index_within_mac) + "]";
    }
    refs += ']';
    lines.push_back("{\"id\":\"" + g.pseudo_id + "\",\"dev\":\"" + g.device_id +
                    "\",\"partial\":" + (g.partial ? "true" : "false") + ",\"cap\":\"" + cap +
                    "\",\"bursts\":" + refs + "}");
  }
  write_record_file(path, "groups.v1", provenance, lines);
}

std::vector<BurstGroup> read_groups(const std::string& path, std::span<const Burst> bursts) {
  const auto file = read_record_file(path, "groups.v1");

  std::map<std::tuple<std::string, std::string, std::size_t>, const Burst*> index;
  for (const auto& b : bursts)
    index[{b.capture_id, b.mac.to_string(), b.index_within_mac}] = &b;

  std::vector<BurstGroup> groups;
  groups.reserve(file.lines.size());
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;
    const json j = parse_line(file.lines[li], lineno);
    BurstGroup g;
    g.pseudo_id = field<std::string>(j, "id", lineno);
    g.device_id = field<std::string>(j, "dev", lineno);
    g.partial = field<bool>(j, "partial", lineno);
    const auto cap = field<std::string>(j, "cap", lineno);
    const auto it = j.find("bursts");
    if (it == j.end() || !it->is_array())
      throw RecordParseError(lineno, "group needs a bursts array");
    for (const auto& jref : *it) {
      if (!jref.is_array() || jref.size() != 2)
        throw RecordParseError(lineno, "burst refs are [mac, index] pairs");
      const auto mac = jref[0].get<std::string>();
      const auto idx = jref[1].get<std::uint64_t>();
      const auto found = index.find({cap, mac, idx});
      if (found == index.end())
        throw RecordParseError(lineno, "group references unknown burst " + mac + "#" +
                                           std::to_string(idx));
      g.bursts.push_back(*found->second);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

// ---- fsm.v1 ----

void write_fsms(const std::string& path, std::span<const Fsm> fsms,
                const std::string& provenance) {
  std::vector<std::string> lines;
  lines.reserve(fsms.size());
  for (const auto& f : fsms) {
    std::string states = "[";
    bool first = true;
    for (const auto& s : f.states) {
      if (!first) states += ',';
      first = false;
      states += '"' + s.to_string() + '"';
    }
    states += ']';

    std::string trans = "[";
    first = true;
    for (const auto& [edge, count] : f.transitions) {
      if (!first) trans += ',';
      first = false;
      trans += "[\"" + edge.first.to_string() + "\",\"" + edge.second.to_string() + "\"," +
               std::to_string(count) + "]";
    }
    trans += ']';

    std::string gaps = "[";
    for (std::size_t i = 0; i < f.inter_burst_gaps.size(); ++i) {
      if (i) gaps += ',';
      gaps += format_double(f.inter_burst_gaps[i]);
    }
    gaps += ']';

    lines.push_back("{\"id\":\"" + f.group_id + "\",\"dev\":\"" + f.device_id +
                    "\",\"initial\":\"" + f.initial.to_string() +
                    "\",\"start\":" + format_double(f.start_time) +
                    ",\"duration\":" + format_double(f.duration) +
                    ",\"frames\":" + std::to_string(f.frame_count) +
                    ",\"bursts\":" + std::to_string(f.burst_count) +
                    ",\"seq_span\":" + std::to_string(f.seq_span) + ",\"gaps\":" + gaps +
                    ",\"states\":" + states + ",\"trans\":" + trans + "}");
  }
  write_record_file(path, "fsm.v1", provenance, lines);
}

std::vector<Fsm> read_fsms(const std::string& path) {
  const auto file = read_record_file(path, "fsm.v1");
  std::vector<Fsm> fsms;
  fsms.reserve(file.lines.size());
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;
    const json j = parse_line(file.lines[li], lineno);
    Fsm f;
    f.group_id = field<std::string>(j, "id", lineno);
    f.device_id = field<std::string>(j, "dev", lineno);
    auto initial = FsmState::parse(field<std::string>(j, "initial", lineno));
    if (!initial) throw RecordParseError(lineno, "bad initial state");
    f.initial = *initial;
    f.start_time = field<double>(j, "start", lineno);
    f.duration = field<double>(j, "duration", lineno);
    f.frame_count = field<std::uint64_t>(j, "frames", lineno);
    f.burst_count = field<std::uint64_t>(j, "bursts", lineno);
    f.seq_span = field<std::uint32_t>(j, "seq_span", lineno);
    const auto gaps = j.find("gaps");
    if (gaps == j.end() || !gaps->is_array()) throw RecordParseError(lineno, "missing gaps");
    for (const auto& g : *gaps) f.inter_burst_gaps.push_back(g.get<double>());
    const auto states = j.find("states");
    if (states == j.end() || !states->is_array())
      throw RecordParseError(lineno, "missing states");
    for (const auto& s : *states) {
      auto st = FsmState::parse(s.get<std::string>());
      if (!st) throw RecordParseError(lineno, "bad state string");
      f.states.insert(*st);
    }
    const auto trans = j.find("trans");
    if (trans == j.end() || !trans->is_array())
      throw RecordParseError(lineno, "missing trans");
    for (const auto& t : *trans) {
      if (!t.is_array() || t.size() != 3)
        throw RecordParseError(lineno, "transitions are [from, to, count] triples");
      auto from = FsmState::parse(t[0].get<std::string>());
      auto to = FsmState::parse(t[1].get<std::string>());
      const auto count = t[2].get<std::uint64_t>();
      if (!from || !to || count < 1) throw RecordParseError(lineno, "bad transition triple");
      f.transitions[{*from, *to}] = count;
    }
    fsms.push_back(std::move(f));
  }
  return fsms;
}

// ---- features.v1 ----

void write_features(const std::string& path, std::span<const FeatureVector> vectors,
                    const std::string& provenance) {
  std::vector<std::string> lines;
  lines.reserve(vectors.size());
  for (const auto& v : vectors) {
    const auto x = v.scalars();
    std::string xs = "[";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) xs += ',';
      xs += format_double(x[i]);
    }
    xs += ']';
    lines.push_back("{\"id\":\"" + v.fingerprint_id + "\",\"dev\":\"" + v.device_id +
                    "\",\"x\":" + xs + ",\"ie\":\"" + bitmap_to_hex(v.ie_bitmap) +
                    "\",\"norm\":" + (v.normalized ? "true" : "false") + "}");
  }
  write_record_file(path, "features.v1", provenance, lines);
}

std::vector<FeatureVector> read_features(const std::string& path) {
  const auto file = read_record_file(path, "features.v1");
  std::vector<FeatureVector> vectors;
  vectors.reserve(file.lines.size());
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;
    const json j = parse_line(file.lines[li], lineno);
    FeatureVector v;
    v.fingerprint_id = field<std::string>(j, "id", lineno);
    v.device_id = field<std::string>(j, "dev", lineno);
    const auto xs = j.find("x");
    if (xs == j.end() || !xs->is_array() || xs->size() != kScalarFeatures)
      throw RecordParseError(lineno, "feature record needs 7 scalars");
    std::array<double, kScalarFeatures> x{};
    for (std::size_t i = 0; i < kScalarFeatures; ++i) {
      if (!(*xs)[i].is_number()) throw RecordParseError(lineno, "bad scalar feature");
      x[i] = (*xs)[i].get<double>();
    }
    v.set_scalars(x);
    try {
      v.ie_bitmap = bitmap_from_hex(field<std::string>(j, "ie", lineno));
    } catch (const FormatError& e) {
      throw RecordParseError(lineno, e.what());
    }
    v.normalized = field<bool>(j, "norm", lineno);
    vectors.push_back(std::move(v));
  }
  return vectors;
}

void write_features_csv(const std::string& path, std::span<const FeatureVector> vectors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot open for writing: " + path);
  out << "pseudo_id,device_id,x1,x2,x3,x4,x5,x6,x7,ie_bitmap\n";
  for (const auto& v : vectors) {
    const auto x = v.scalars();
    out << v.fingerprint_id << ',' << v.device_id;
    for (double xi : x) out << ',' << format_double(xi);
    out << ',' << bitmap_to_hex(v.ie_bitmap) << '\n';
  }
  if (!out) throw StorageError("write failed: " + path);
}

// ---- model.v1 ----

void write_model(const std::string& path, const ClassifierModel& model,
                 const std::string& provenance) {
  std::vector<std::string> lines;
  {
    std::string devices = "[";
    bool first = true;
    for (const auto& d : model.train_devices) {
      if (!first) devices += ',';
      first = false;
      devices += '"' + d + '"';
    }
    devices += ']';
    lines.push_back(std::string("{\"part\":\"meta\",\"kind\":\"") + model_kind_name(model.kind) +
                    "\",\"seed\":" + std::to_string(model.seed) +
                    ",\"lr_rate\":" + format_double(model.hyper.lr.learning_rate) +
                    ",\"lr_epochs\":" + std::to_string(model.hyper.lr.epochs) +
                    ",\"lr_l2\":" + format_double(model.hyper.lr.l2) +
                    ",\"rf_trees\":" + std::to_string(model.hyper.rf.trees) +
                    ",\"rf_depth\":" + std::to_string(model.hyper.rf.max_depth) +
                    ",\"devices\":" + devices + "}");
  }
  if (model.kind == ModelKind::logistic_regression) {
    auto arr = [](const std::array<double, 3>& a) {
      return "[" + format_double(a[0]) + "," + format_double(a[1]) + "," + format_double(a[2]) +
             "]";
    };
    lines.push_back("{\"part\":\"linear\",\"mean\":" + arr(model.feat_mean) +
                    ",\"scale\":" + arr(model.feat_scale) + ",\"w\":" + arr(model.weights) +
                    ",\"b\":" + format_double(model.bias) + "}");
  } else {
    for (const auto& tree : model.trees) {
      std::string nodes = "[";
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (i) nodes += ',';
        nodes += "[" + std::to_string(n.feature) + "," + format_double(n.threshold) + "," +
                 std::to_string(n.left) + "," + std::to_string(n.right) + "," +
                 format_double(n.prob) + "]";
      }
      nodes += ']';
      lines.push_back("{\"part\":\"tree\",\"nodes\":" + nodes + "}");
    }
  }
  write_record_file(path, "model.v1", provenance, lines);
}

ClassifierModel read_model(const std::string& path) {
  const auto file = read_record_file(path, "model.v1");
  if (file.lines.empty()) throw FormatError("model file has no records: " + path);

  ClassifierModel model;
  bool saw_meta = false;
  for (std::size_t li = 0; li < file.lines.size(); ++li) {
    const std::size_t lineno = li + 2;
    const json j = parse_line(file.lines[li], lineno);
    const auto part = field<std::string>(j, "part", lineno);
    if (part == "meta") {
      model.kind = model_kind_from_name(field<std::string>(j, "kind", lineno));
      model.seed = field<std::uint64_t>(j, "seed", lineno);
      model.hyper.lr.learning_rate = field<double>(j, "lr_rate", lineno);
      model.hyper.lr.epochs = field<int>(j, "lr_epochs", lineno);
      model.hyper.lr.l2 = field<double>(j, "lr_l2", lineno);
      model.hyper.rf.trees = field<int>(j, "rf_trees", lineno);
      model.hyper.rf.max_depth = field<int>(j, "rf_depth", lineno);
      const auto devices = j.find("devices");
      if (devices != j.end() && devices->is_array())
        for (const auto& d : *devices) model.train_devices.insert(d.get<std::string>());
      saw_meta = true;
    } else if (part == "linear") {
      auto arr = [&](const char* key) {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_array() || it->size() != 3)
          throw RecordParseError(lineno, std::string("bad array '") + key + "'");
        return std::array<double, 3>{(*it)[0].get<double>(), (*it)[1].get<double>(),
                                     (*it)[2].get<double>()};
      };
      model.feat_mean = arr("mean");
      model.feat_scale = arr("scale");
      model.weights = arr("w");
      model.bias = field<double>(j, "b", lineno);
    } else if (part == "tree") {
      const auto nodes = j.find("nodes");
      if (nodes == j.end() || !nodes->is_array())
        throw RecordParseError(lineno, "tree record needs nodes");
      DecisionTree tree;
      for (const auto& n : *nodes) {
        if (!n.is_array() || n.size() != 5) throw RecordParseError(lineno, "bad tree node");
        tree.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(),
                              n[3].get<int>(), n[4].get<double>()});
      }
      model.trees.push_back(std::move(tree));
    } else {
      throw RecordParseError(lineno, "unknown record part '" + part + "'");
    }
  }
  if (!saw_meta) throw FormatError("model file lacks a meta record: " + path);
  return model;
}

}  // namespace store
}  // namespace fsmfp
