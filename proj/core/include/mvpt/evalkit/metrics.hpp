#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvpt::evalkit {

// 1 + #candidates scoring strictly higher than the truth + #earlier candidates
// scoring exactly the same (the truth loses ties to earlier candidates only).
std::size_t rank_of_truth(std::span<const double> scores, std::size_t truth_index);

// Ranks `truth_index` among `candidates` by cosine similarity to `query`.
// Throws ShapeError on a dimension mismatch and ValueError for a bad index.
std::size_t rank_ground_truth(std::span<const float> query,
                              const std::vector<std::span<const float>>& candidates,
                              std::size_t truth_index);

// 100 * |{rank <= k}| / |ranks|. Empty input gives 0.
double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);

// Lower median: sorted[ceil(n/2) - 1]. Throws ValueError on empty input.
std::size_t median_rank(std::span<const std::size_t> ranks);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace mvpt::evalkit
