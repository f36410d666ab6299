#pragma once

#include <vector>

#include "mvpt/model/encoder.hpp"

namespace mvpt::model {

struct RolloutResult {
  // Relevance of each segment for the [CLS] output; sums to 1 unless
  // `degenerate` is set, in which case it is all zeros.
  std::vector<double> weights;
  // True when the [CLS] row carries no mass onto any segment.
  bool degenerate = false;
};

// Attention rollout over the layers of one tower: average heads, mix each
// layer with the identity (0.5 A + 0.5 I), renormalize rows, and chain the
// layers (later layers applied on the left). Throws ValueError when a
// head-averaged row deviates from summing to 1 by more than 1e-4.
RolloutResult attention_rollout(const AttentionMaps& maps);

}  // namespace mvpt::model
