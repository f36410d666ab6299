#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvpt/numcore/matrix.hpp"

namespace mvpt::dataio {

struct MusicRegion {
  double start_s = 0.0;
  double end_s = 0.0;
  friend bool operator==(const MusicRegion&, const MusicRegion&) = default;
};

struct RegionParams {
  double fps = 1.0;
  double music_thresh = 0.3;
  double other_thresh = 0.2;
  double closing_s = 3.0;
  double min_duration_s = 20.0;
};

// Per-frame class probabilities (rows = frames) with column names.
struct ProbabilityStream {
  std::vector<std::string> classes;
  Matrix probs;
};

// A frame is positive when max over music columns >= music_thresh and max over
// the other columns < other_thresh. The boolean timeline is then closed with a
// flat window of w = round(closing_s * fps) frames (edges replicate the border
// frame), which fills every interior gap shorter than w frames. Runs lasting at
// least min_duration_s are returned as [first / fps, (last + 1) / fps).
std::vector<MusicRegion> detect_music_regions(const Matrix& probs,
                                              const std::vector<std::size_t>& music_classes,
                                              const RegionParams& params = {});

// Frame mask before closing.
std::vector<bool> music_positive_frames(const Matrix& probs,
                                        const std::vector<std::size_t>& music_classes,
                                        const RegionParams& params);

// Closing by run-length gap filling.
std::vector<bool> close_timeline(const std::vector<bool>& mask, std::size_t window);

// Header of class names, then one row of probabilities per frame.
ProbabilityStream read_probability_csv(const std::filesystem::path& path);
ProbabilityStream parse_probability_csv(const std::string& text);

// Column indices of the named classes (case-insensitive). Throws ConfigError
// for a name that is not present.
std::vector<std::size_t> resolve_classes(const ProbabilityStream& stream,
                                         const std::vector<std::string>& names);

}  // namespace mvpt::dataio
