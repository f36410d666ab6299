#include "mvpt/dataio/feature_sequence.hpp"

#include <cmath>
#include <unordered_set>

#include "mvpt/error.hpp"

namespace mvpt {

std::string_view to_string(Modality m) {
  return m == Modality::kVisual ? "visual" : "music";
}

Modality parse_modality(std::string_view text) {
  if (text == "visual") return Modality::kVisual;
  if (text == "music") return Modality::kMusic;
  throw ConfigError("unknown modality '" + std::string(text) + "' (expected visual|music)");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(text) + "' (expected train|val|test)");
}

void FeatureSequence::validate() const {
  if (features.rows == 0 || features.cols == 0) {
    throw ValueError("feature sequence '" + track_id + "' is empty");
  }
  if (features.values.size() != features.rows * features.cols) {
    throw ValueError("feature sequence '" + track_id + "' has inconsistent storage");
  }
  for (float v : features.values) {
    if (!std::isfinite(v)) throw ValueError("feature sequence '" + track_id + "' is not finite");
  }
  if (!(segment_duration > 0.0f)) {
    throw ValueError("feature sequence '" + track_id + "' has non-positive segment duration");
  }
}

void PairedDataset::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& pair : pairs) {
    pair.visual.validate();
    pair.music.validate();
    if (pair.visual.track_id != pair.music.track_id) {
      throw ValueError("pair ids differ: '" + pair.visual.track_id + "' vs '" +
                       pair.music.track_id + "'");
    }
    if (pair.visual.length() != pair.music.length()) {
      throw ValueError("track '" + pair.track_id() + "' has " +
                       std::to_string(pair.visual.length()) + " visual but " +
                       std::to_string(pair.music.length()) + " music segments");
    }
    if (pair.visual.modality != Modality::kVisual || pair.music.modality != Modality::kMusic) {
      throw ValueError("track '" + pair.track_id() + "' has swapped modalities");
    }
    if (!ids.insert(pair.track_id()).second) {
      throw ValueError("duplicate track id '" + pair.track_id() + "'");
    }
  }
}

}  // namespace mvpt
