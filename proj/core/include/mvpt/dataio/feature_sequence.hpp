#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mvpt/numcore/matrix.hpp"

namespace mvpt {

enum class Modality : std::uint8_t { kVisual = 0, kMusic = 1 };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);

inline Modality other(Modality m) {
  return m == Modality::kVisual ? Modality::kMusic : Modality::kVisual;
}

// One track in one modality: per-segment base features (rows = segments).
struct FeatureSequence {
  std::string track_id;
  Modality modality = Modality::kVisual;
  Matrix features;
  float segment_duration = 1.0f;  // seconds per segment
  std::map<std::string, std::string> labels;

  std::size_t length() const { return features.rows; }
  std::size_t dim() const { return features.cols; }

  // Throws ValueError on an empty or non-finite sequence.
  void validate() const;
};

struct TrackPair {
  FeatureSequence visual;
  FeatureSequence music;

  const std::string& track_id() const { return visual.track_id; }
  const FeatureSequence& get(Modality m) const { return m == Modality::kVisual ? visual : music; }
  FeatureSequence& get(Modality m) { return m == Modality::kVisual ? visual : music; }
};

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Split s);
Split parse_split(std::string_view text);

struct PairedDataset {
  std::vector<TrackPair> pairs;
  Split split = Split::kTrain;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  // Per pair: matching ids, equal lengths, valid sequences. Ids unique.
  void validate() const;
};

}  // namespace mvpt
