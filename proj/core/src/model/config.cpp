#include "mvpt/model/config.hpp"

#include <cmath>
#include <string>

#include "mvpt/error.hpp"

namespace mvpt::model {

std::string_view to_string(Architecture a) {
  return a == Architecture::kTransformer ? "transformer" : "mlp";
}

Architecture parse_architecture(std::string_view text) {
  if (text == "transformer") return Architecture::kTransformer;
  if (text == "mlp") return Architecture::kMlp;
  throw ConfigError("unknown architecture '" + std::string(text) +
                    "' (expected transformer|mlp)");
}

void ModelConfig::validate() const {
  if (d_in_v == 0 || d_in_m == 0) throw ConfigError("model: input dimensions must be positive");
  if (d_h == 0) throw ConfigError("model: d_h must be positive");
  if (heads == 0 || d_h % heads != 0) {
    throw ConfigError("model: d_h (" + std::to_string(d_h) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  }
  if (layers == 0) throw ConfigError("model: layers must be positive");
  if (max_len == 0) throw ConfigError("model: max_len must be at least 1");
  if (ffn_mult == 0) throw ConfigError("model: ffn_mult must be positive");
  if (!(temperature > 0.0f) || !std::isfinite(temperature)) {
    throw ConfigError("model: temperature must be positive");
  }
}

std::size_t transformer_parameter_count(const ModelConfig& c, Modality m) {
  const std::size_t d = c.d_h, f = c.ffn_mult * c.d_h;
  std::size_t n = c.d_in(m) * d + d;  // input projection
  n += d;                             // [CLS]
  if (c.temporal_embedding(m)) n += c.max_len * d;
  const std::size_t per_layer = 2 * d                // ln1
                                + 3 * d * d + 3 * d  // qkv
                                + d * d + d          // output projection
                                + 2 * d              // ln2
                                + d * f + f          // ffn in
                                + f * d + d;         // ffn out
  n += c.layers * per_layer;
  n += 2 * d;  // final layer norm
  return n;
}

std::size_t mlp_parameter_count(const ModelConfig& c, Modality m, std::size_t hidden) {
  const std::size_t h = hidden;
  return c.d_in(m) * h + h + h * h + h + h * c.d_h + c.d_h;
}

std::size_t mlp_hidden_width(const ModelConfig& c, Modality m) {
  if (c.mlp_hidden != 0) return c.mlp_hidden;
  // h^2 + (d_in + d_h + 2) h + d_h = target
  const double target = static_cast<double>(transformer_parameter_count(c, m));
  const double b = static_cast<double>(c.d_in(m) + c.d_h + 2);
  const double cterm = static_cast<double>(c.d_h) - target;
  const double root = (-b + std::sqrt(b * b - 4.0 * cterm)) / 2.0;
  std::size_t best = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(root)));
  auto gap = [&](std::size_t h) {
    return std::abs(static_cast<double>(mlp_parameter_count(c, m, h)) - target);
  };
  if (gap(best + 1) < gap(best)) ++best;
  return best;
}

}  // namespace mvpt::model
