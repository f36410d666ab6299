#include "mvpt/dataio/music_regions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "../binary_io.hpp"
#include "mvpt/error.hpp"

namespace mvpt::dataio {

std::vector<bool> music_positive_frames(const Matrix& probs,
                                        const std::vector<std::size_t>& music_classes,
                                        const RegionParams& params) {
  if (probs.empty()) throw ValueError("detect_music_regions: empty probability matrix");
  if (!(params.fps > 0.0)) throw ValueError("detect_music_regions: fps must be positive");
  if (music_classes.empty()) throw ValueError("detect_music_regions: no music classes given");
  std::vector<bool> is_music(probs.cols, false);
  for (auto c : music_classes) {
    if (c >= probs.cols) throw ValueError("detect_music_regions: music class index out of range");
    is_music[c] = true;
  }
  std::vector<bool> mask(probs.rows);
  for (std::size_t t = 0; t < probs.rows; ++t) {
    float music = 0.0f, other = 0.0f;
    for (std::size_t c = 0; c < probs.cols; ++c) {
      const float p = probs(t, c);
      if (!(p >= 0.0f && p <= 1.0f)) {
        throw ValueError("detect_music_regions: probability outside [0,1] at frame " + std::to_string(t));
      }
      if (is_music[c]) {
        music = std::max(music, p);
      } else {
        other = std::max(other, p);
      }
    }
    mask[t] = music >= params.music_thresh && other < params.other_thresh;
  }
  return mask;
}

std::vector<bool> close_timeline(const std::vector<bool>& mask, std::size_t window) {
  std::vector<bool> out = mask;
  if (window <= 1) return out;
  // Only false runs bounded by true frames on both sides can be filled.
  std::size_t i = 0;
  while (i < out.size() && !out[i]) ++i;
  while (i < out.size()) {
    std::size_t j = i;
    while (j < out.size() && out[j]) ++j;
    std::size_t k = j;
    while (k < out.size() && !out[k]) ++k;
    if (k < out.size() && k - j < window) std::fill(out.begin() + j, out.begin() + k, true);
    i = k;
  }
  return out;
}

std::vector<MusicRegion> detect_music_regions(const Matrix& probs,
                                              const std::vector<std::size_t>& music_classes,
                                              const RegionParams& params) {
  const auto mask = music_positive_frames(probs, music_classes, params);
  const auto window = static_cast<std::size_t>(std::llround(params.closing_s * params.fps));
  const auto closed = close_timeline(mask, window);
  std::vector<MusicRegion> regions;
  for (std::size_t i = 0; i < closed.size();) {
    if (!closed[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < closed.size() && closed[j]) ++j;
    const double start = static_cast<double>(i) / params.fps, end = static_cast<double>(j) / params.fps;
    if (end - start >= params.min_duration_s - 1e-9) regions.push_back({start, end});
    i = j;
  }
  return regions;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

ProbabilityStream parse_probability_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ProbabilityStream stream;
  if (!std::getline(in, line)) throw FormatError("probability CSV: missing header");
  stream.classes = split_csv_line(line);
  if (stream.classes.empty()) throw FormatError("probability CSV: empty header");
  std::vector<float> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != stream.classes.size()) {
      throw FormatError("probability CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(stream.classes.size()) + " values, got " +
                        std::to_string(cells.size()));
    }
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        values.push_back(std::stof(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw FormatError("probability CSV line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    ++rows;
  }
  stream.probs = Matrix(rows, stream.classes.size());
  stream.probs.values = std::move(values);
  return stream;
}

ProbabilityStream read_probability_csv(const std::filesystem::path& path) {
  return parse_probability_csv(detail::read_text(path));
}

std::vector<std::size_t> resolve_classes(const ProbabilityStream& stream,
                                         const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& name : names) {
    const auto it = std::find_if(stream.classes.begin(), stream.classes.end(),
                                 [&](const std::string& c) { return lower(c) == lower(name); });
    if (it == stream.classes.end()) throw ConfigError("class '" + name + "' not in probability CSV header");
    out.push_back(static_cast<std::size_t>(it - stream.classes.begin()));
  }
  return out;
}

}  // namespace mvpt::dataio
