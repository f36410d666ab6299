#pragma once

// The two modality towers and their forward passes.
//
// Transformer tower, for a sequence of L segments:
//   h   = features * W_in + b_in            (L x d_h)
//   h  += temporal[0..L)                    (only when enabled for the tower)
//   x   = [cls; h]                          ((L+1) x d_h, [CLS] at position 0)
//   x  += MHA(LN(x)); x += FFN(LN(x))       (per layer, pre-norm)
//   out = LN(x)
// Row 0 of `out` is the track embedding, rows 1..L the segment embeddings.
//
// MLP tower: three dense layers with GELU between them, applied to each
// segment's own features (segment level) or to the time-average of all
// segments (track level).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvpt/dataio/feature_sequence.hpp"
#include "mvpt/model/config.hpp"
#include "mvpt/numcore/matrix.hpp"
#include "mvpt/numcore/tensor.hpp"

namespace mvpt::model {

using numcore::Tensor;

template <typename T>
struct LayerWeights {
  Tensor<T> ln1_gain, ln1_bias;
  Tensor<T> qkv_weight, qkv_bias;
  Tensor<T> out_weight, out_bias;
  Tensor<T> ln2_gain, ln2_bias;
  Tensor<T> ffn_in_weight, ffn_in_bias;
  Tensor<T> ffn_out_weight, ffn_out_bias;
};

template <typename T>
struct TowerWeights {
  // transformer
  Tensor<T> input_weight, input_bias;
  Tensor<T> cls;
  Tensor<T> temporal;  // undefined when the tower has no temporal embedding
  std::vector<LayerWeights<T>> layers;
  Tensor<T> final_gain, final_bias;
  // mlp
  Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2, mlp_w3, mlp_b3;
};

template <typename T>
using NamedTensor = std::pair<std::string, Tensor<T>>;

template <typename T>
struct Model {
  ModelConfig config;
  TowerWeights<T> visual;
  TowerWeights<T> music;

  const TowerWeights<T>& tower(Modality m) const {
    return m == Modality::kVisual ? visual : music;
  }
  TowerWeights<T>& tower(Modality m) { return m == Modality::kVisual ? visual : music; }

  // Handles to every trainable tensor in a fixed order, named
  // "<modality>.<field>" or "<modality>.layer<k>.<field>".
  std::vector<NamedTensor<T>> parameters() const;
  std::size_t parameter_count() const;
  std::size_t parameter_count(Modality m) const;
};

// Fresh weights: truncated normal (std 0.02, cut at 2 std) for matrices and
// embeddings, zero biases, unit layer-norm gains. Deterministic per seed.
template <typename T>
Model<T> init_model(const ModelConfig& config, std::uint64_t seed);

// Deep copy, possibly converting precision.
template <typename To, typename From>
Model<To> convert_model(const Model<From>& model);

// [layer][head], each (L+1) x (L+1) with the [CLS] token at index 0.
using AttentionMaps = std::vector<std::vector<Matrix>>;

template <typename T>
struct EncodeResult {
  Tensor<T> per_segment;  // L x d_h
  Tensor<T> track;        // 1 x d_h
};

// Differentiable forward pass over a feature matrix (L x d_in). Attention
// probabilities are copied into `attention` when it is non-null
// (transformer only).
template <typename T>
EncodeResult<T> encode_tensor(const Model<T>& model, Modality modality,
                              const Tensor<T>& features, AttentionMaps* attention = nullptr);

// Embeddings of one track in one modality.
struct EmbeddingSet {
  std::string track_id;
  Modality modality = Modality::kVisual;
  Matrix per_segment;        // L x d_h
  std::vector<float> track;  // d_h

  std::size_t length() const { return per_segment.rows; }
};

// Inference on a feature sequence; the modality is taken from the sequence.
// Throws ShapeError for over-long sequences or a feature-dimension mismatch.
EmbeddingSet encode(const FeatureSequence& seq, const Model<float>& model,
                    AttentionMaps* attention = nullptr);

// MLP baseline on a single (already averaged) feature vector.
std::vector<float> mlp_encode(std::span<const float> feature, const Model<float>& model,
                              Modality modality);

}  // namespace mvpt::model
