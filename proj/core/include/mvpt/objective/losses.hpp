#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "mvpt/numcore/tensor.hpp"

namespace mvpt::objective {

using numcore::Tensor;

// Retrieval granularity: per-segment embeddings or one [CLS] embedding per track.
enum class Level : std::uint8_t { kSegment, kTrack };
enum class LossKind : std::uint8_t { kInfoNce, kTriplet };

std::string_view to_string(Level l);
Level parse_level(std::string_view text);
std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view text);

struct LossConfig {
  float temperature = 0.3f;
  float margin = 0.2f;  // triplet only

  void validate() const;
};

// Cosine similarity with both norms floored at 1e-8; zero vectors give 0.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// Differentiable cosine similarity between two vectors of equal size, shape [].
template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct LossParts {
  Tensor<T> total;
  Tensor<T> v2m;
  Tensor<T> m2v;
};

// Bidirectional InfoNCE over M matched rows. Row i of `visual` pairs with row
// i of `music`; every other row of the opposite modality is a negative. Each
// direction is the mean over its M queries of
//   -log softmax_j(s(q_i, c_j) / temperature)[i].
// Throws ShapeError for M < 2 or mismatched shapes and ValueError for
// non-finite embeddings.
template <typename T>
LossParts<T> infonce(const Tensor<T>& visual, const Tensor<T>& music, T temperature);

// Mean over rows of max(0, margin - s(anchor, positive) + s(anchor, negative)).
template <typename T>
Tensor<T> triplet(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative,
                  T margin);

}  // namespace mvpt::objective
