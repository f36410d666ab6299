#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "mvpt/dataio/feature_sequence.hpp"

namespace mvpt::model {

enum class Architecture : std::uint8_t { kTransformer = 0, kMlp = 1 };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view text);

// Architecture hyperparameters for both towers. The transformer is pre-norm
// with GELU feed-forward blocks of width ffn_mult * d_h and a final layer norm.
struct ModelConfig {
  Architecture arch = Architecture::kTransformer;
  std::size_t d_in_v = 0;
  std::size_t d_in_m = 0;
  std::size_t d_h = 256;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t max_len = 30;
  std::size_t ffn_mult = 4;
  bool temporal_embedding_v = true;
  bool temporal_embedding_m = false;
  float temperature = 0.3f;
  // Hidden width of the MLP baseline; 0 picks the width whose parameter count
  // is closest to the transformer tower with the same settings.
  std::size_t mlp_hidden = 0;

  std::size_t d_in(Modality m) const { return m == Modality::kVisual ? d_in_v : d_in_m; }
  bool temporal_embedding(Modality m) const {
    return m == Modality::kVisual ? temporal_embedding_v : temporal_embedding_m;
  }

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::size_t transformer_parameter_count(const ModelConfig& config, Modality m);
std::size_t mlp_parameter_count(const ModelConfig& config, Modality m, std::size_t hidden);
// Hidden width for the MLP baseline of one tower (config.mlp_hidden when set).
std::size_t mlp_hidden_width(const ModelConfig& config, Modality m);

}  // namespace mvpt::model
