#pragma once

#include <string>

#include "mvpt/dataio/feature_sequence.hpp"
#include "mvpt/numcore/matrix.hpp"

namespace mvpt::dataio {

// Averages frame-level features (rows = frames at `fps`) into segments of
// `segment_s` seconds. Frame i falls into bin floor(i / (segment_s * fps));
// a trailing partial bin is dropped. Throws ValueError when there are fewer
// frames than one bin.
FeatureSequence pool_segments(const Matrix& frames, double fps, double segment_s,
                              Modality modality = Modality::kVisual, std::string track_id = {});

}  // namespace mvpt::dataio
