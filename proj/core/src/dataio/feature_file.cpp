#include "mvpt/dataio/feature_file.hpp"

#include <cmath>
#include <json.hpp>

#include "../binary_io.hpp"
#include "mvpt/error.hpp"

namespace mvpt::dataio {

using nlohmann::json;

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq) {
  seq.validate();
  detail::ByteWriter w;
  w.bytes("MVPT");
  w.u32(kFeatureFileVersion);
  w.u8(static_cast<std::uint8_t>(seq.modality));
  w.u32(static_cast<std::uint32_t>(seq.length()));
  w.u32(static_cast<std::uint32_t>(seq.dim()));
  w.f32(seq.segment_duration);
  w.f32s(seq.features.values);
  return w.take();
}

FeatureSequence decode_features(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "MVPT feature file");
  const std::string magic = r.bytes(4);
  if (magic != "MVPT") throw FormatError("feature file: bad magic '" + magic + "'");
  const std::uint32_t version = r.u32();
  if (version != kFeatureFileVersion) {
    throw FormatError("feature file: unsupported version " + std::to_string(version));
  }
  const std::uint8_t modality = r.u8();
  if (modality > 1) throw FormatError("feature file: unknown modality code " + std::to_string(modality));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const float duration = r.f32();
  if (rows == 0 || cols == 0) throw FormatError("feature file: empty feature matrix");
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (count * 4 > r.remaining()) {
    throw FormatError("feature file: truncated payload (header declares " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " floats, " + std::to_string(r.remaining()) +
                      " bytes remain)");
  }
  FeatureSequence seq;
  seq.modality = static_cast<Modality>(modality);
  seq.segment_duration = duration;
  seq.features = Matrix(rows, cols);
  r.f32s(seq.features.values);
  if (!r.done()) throw FormatError("feature file: trailing bytes after payload");
  return seq;
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  detail::write_file(path, encode_features(seq));
}

FeatureSequence read_features(const std::filesystem::path& path) {
  auto seq = decode_features(detail::read_file(path));
  const std::string name = path.filename().string();
  seq.track_id = name.substr(0, name.find('.'));
  return seq;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(detail::read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw FormatError("manifest '" + path.string() + "': expected a JSON array");
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc) {
    try {
      ManifestEntry e;
      e.track_id = item.at("track_id").get<std::string>();
      e.visual_path = item.at("visual_path").get<std::string>();
      e.music_path = item.at("music_path").get<std::string>();
      e.duration_s = item.value("duration_s", 0.0);
      if (item.contains("labels")) {
        for (const auto& [k, v] : item.at("labels").items()) e.labels[k] = v.get<std::string>();
      }
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError("manifest '" + path.string() + "': " + ex.what());
    }
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  json doc = json::array();
  for (const auto& e : entries) {
    json labels = json::object();
    for (const auto& [k, v] : e.labels) labels[k] = v;
    doc.push_back({{"track_id", e.track_id},
                   {"visual_path", e.visual_path},
                   {"music_path", e.music_path},
                   {"duration_s", e.duration_s},
                   {"labels", labels}});
  }
  detail::write_text(path, doc.dump(2) + "\n");
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const PairedDataset& data) {
  data.validate();
  const std::string split(to_string(data.split));
  std::vector<ManifestEntry> entries;
  for (const auto& pair : data.pairs) {
    ManifestEntry e;
    e.track_id = pair.track_id();
    e.visual_path = split + "/" + e.track_id + ".visual.mvpt";
    e.music_path = split + "/" + e.track_id + ".music.mvpt";
    e.duration_s = static_cast<double>(pair.visual.length()) * pair.visual.segment_duration;
    e.labels = pair.visual.labels;
    write_features(dir / e.visual_path, pair.visual);
    write_features(dir / e.music_path, pair.music);
    entries.push_back(std::move(e));
  }
  const auto manifest = dir / (split + ".json");
  write_manifest(manifest, entries);
  return manifest;
}

PairedDataset read_dataset(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  PairedDataset data;
  try {
    data.split = parse_split(manifest.stem().string());
  } catch (const ConfigError&) {
    data.split = Split::kTest;
  }
  for (const auto& e : read_manifest(manifest)) {
    TrackPair pair;
    pair.visual = read_features(base / e.visual_path);
    pair.music = read_features(base / e.music_path);
    if (pair.visual.modality != Modality::kVisual || pair.music.modality != Modality::kMusic) {
      throw FormatError("manifest entry '" + e.track_id + "' points at files of the wrong modality");
    }
    pair.visual.track_id = e.track_id;
    pair.music.track_id = e.track_id;
    pair.visual.labels = e.labels;
    pair.music.labels = e.labels;
    data.pairs.push_back(std::move(pair));
  }
  data.validate();
  return data;
}

}  // namespace mvpt::dataio
