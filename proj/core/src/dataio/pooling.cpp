#include "mvpt/dataio/pooling.hpp"

#include <cmath>

#include "mvpt/error.hpp"

namespace mvpt::dataio {

FeatureSequence pool_segments(const Matrix& frames, double fps, double segment_s, Modality modality,
                              std::string track_id) {
  if (!(fps > 0.0) || !(segment_s > 0.0)) throw ValueError("pool_segments: fps and t must be positive");
  if (frames.empty()) throw ValueError("pool_segments: no frames");
  const double per_bin = segment_s * fps;
  // The epsilon keeps exact multiples (10 frames / 5 per bin) from losing a bin to rounding.
  auto bin_of = [&](double frame) {
    return static_cast<std::size_t>(std::floor(frame / per_bin + 1e-9));
  };
  const std::size_t bins = bin_of(static_cast<double>(frames.rows));
  if (bins == 0) {
    throw ValueError("pool_segments: " + std::to_string(frames.rows) +
                     " frames are fewer than one segment of " + std::to_string(per_bin) + " frames");
  }
  std::vector<double> sums(bins * frames.cols, 0.0);
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t i = 0; i < frames.rows; ++i) {
    const std::size_t b = bin_of(static_cast<double>(i));
    if (b >= bins) break;
    ++counts[b];
    for (std::size_t c = 0; c < frames.cols; ++c) sums[b * frames.cols + c] += frames(i, c);
  }
  FeatureSequence seq;
  seq.track_id = std::move(track_id);
  seq.modality = modality;
  seq.segment_duration = static_cast<float>(segment_s);
  seq.features = Matrix(bins, frames.cols);
  for (std::size_t b = 0; b < bins; ++b) {
    if (counts[b] == 0) throw ValueError("pool_segments: segment shorter than one frame");
    for (std::size_t c = 0; c < frames.cols; ++c) {
      seq.features(b, c) = static_cast<float>(sums[b * frames.cols + c] / counts[b]);
    }
  }
  return seq;
}

}  // namespace mvpt::dataio
