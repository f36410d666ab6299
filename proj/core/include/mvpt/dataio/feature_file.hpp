#pragma once

// MVPT feature files, little-endian:
//   "MVPT"  u32 version (= 1)  u8 modality  u32 L_raw  u32 d  f32 t
//   f32 values[L_raw * d], row-major
// Track ids and labels are not stored here; they live in the dataset
// manifest next to the files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvpt/dataio/feature_sequence.hpp"

namespace mvpt::dataio {

inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> encode_features(const FeatureSequence& seq);
// Throws FormatError on a bad magic, unknown version or truncated payload.
FeatureSequence decode_features(std::span<const std::uint8_t> bytes);

void write_features(const std::filesystem::path& path, const FeatureSequence& seq);
// The track id defaults to the file name up to its first '.'.
FeatureSequence read_features(const std::filesystem::path& path);

struct ManifestEntry {
  std::string track_id;
  std::string visual_path;  // relative to the manifest's directory
  std::string music_path;
  double duration_s = 0.0;
  std::map<std::string, std::string> labels;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Writes <dir>/<split>/<id>.visual.mvpt, <id>.music.mvpt and <dir>/<split>.json.
// Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const PairedDataset& data);
// Loads every pair listed in a manifest; the split is taken from the file stem
// when it names one (train.json, test.json, ...).
PairedDataset read_dataset(const std::filesystem::path& manifest);

}  // namespace mvpt::dataio
