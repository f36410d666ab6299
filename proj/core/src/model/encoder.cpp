#include "mvpt/model/encoder.hpp"

#include <cmath>
#include <random>

#include "mvpt/error.hpp"
#include "mvpt/numcore/ops.hpp"

namespace mvpt::model {

namespace nc = numcore;

namespace {

constexpr double kInitStd = 0.02;

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  template <typename T>
  Tensor<T> normal(nc::Shape shape) {
    std::vector<T> values(nc::shape_numel(shape));
    for (auto& v : values) {
      double z;
      do {
        z = unit_(rng_);
      } while (std::abs(z) > 2.0);
      v = static_cast<T>(z * kInitStd);
    }
    return Tensor<T>::from(std::move(shape), std::move(values), true);
  }

  template <typename T>
  Tensor<T> constant(nc::Shape shape, T value) {
    return Tensor<T>::full(std::move(shape), value, true);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

template <typename T>
TowerWeights<T> init_tower(const ModelConfig& c, Modality m, Initializer& init) {
  TowerWeights<T> w;
  const std::size_t d = c.d_h, din = c.d_in(m);
  if (c.arch == Architecture::kMlp) {
    const std::size_t h = mlp_hidden_width(c, m);
    w.mlp_w1 = init.normal<T>({din, h});
    w.mlp_b1 = init.constant<T>({h}, T{0});
    w.mlp_w2 = init.normal<T>({h, h});
    w.mlp_b2 = init.constant<T>({h}, T{0});
    w.mlp_w3 = init.normal<T>({h, d});
    w.mlp_b3 = init.constant<T>({d}, T{0});
    return w;
  }
  const std::size_t f = c.ffn_mult * d;
  w.input_weight = init.normal<T>({din, d});
  w.input_bias = init.constant<T>({d}, T{0});
  w.cls = init.normal<T>({1, d});
  if (c.temporal_embedding(m)) w.temporal = init.normal<T>({c.max_len, d});
  for (std::size_t l = 0; l < c.layers; ++l) {
    LayerWeights<T> lw;
    lw.ln1_gain = init.constant<T>({d}, T{1});
    lw.ln1_bias = init.constant<T>({d}, T{0});
    lw.qkv_weight = init.normal<T>({d, 3 * d});
    lw.qkv_bias = init.constant<T>({3 * d}, T{0});
    lw.out_weight = init.normal<T>({d, d});
    lw.out_bias = init.constant<T>({d}, T{0});
    lw.ln2_gain = init.constant<T>({d}, T{1});
    lw.ln2_bias = init.constant<T>({d}, T{0});
    lw.ffn_in_weight = init.normal<T>({d, f});
    lw.ffn_in_bias = init.constant<T>({f}, T{0});
    lw.ffn_out_weight = init.normal<T>({f, d});
    lw.ffn_out_bias = init.constant<T>({d}, T{0});
    w.layers.push_back(std::move(lw));
  }
  w.final_gain = init.constant<T>({d}, T{1});
  w.final_bias = init.constant<T>({d}, T{0});
  return w;
}

template <typename T>
void append_tower(std::vector<NamedTensor<T>>& out, const std::string& prefix,
                  const TowerWeights<T>& w) {
  auto add = [&](const std::string& name, const Tensor<T>& t) {
    if (t.defined()) out.emplace_back(prefix + "." + name, t);
  };
  add("input_weight", w.input_weight);
  add("input_bias", w.input_bias);
  add("cls", w.cls);
  add("temporal", w.temporal);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& lw = w.layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "ln1_gain", lw.ln1_gain);
    add(p + "ln1_bias", lw.ln1_bias);
    add(p + "qkv_weight", lw.qkv_weight);
    add(p + "qkv_bias", lw.qkv_bias);
    add(p + "out_weight", lw.out_weight);
    add(p + "out_bias", lw.out_bias);
    add(p + "ln2_gain", lw.ln2_gain);
    add(p + "ln2_bias", lw.ln2_bias);
    add(p + "ffn_in_weight", lw.ffn_in_weight);
    add(p + "ffn_in_bias", lw.ffn_in_bias);
    add(p + "ffn_out_weight", lw.ffn_out_weight);
    add(p + "ffn_out_bias", lw.ffn_out_bias);
  }
  add("final_gain", w.final_gain);
  add("final_bias", w.final_bias);
  add("mlp_w1", w.mlp_w1);
  add("mlp_b1", w.mlp_b1);
  add("mlp_w2", w.mlp_w2);
  add("mlp_b2", w.mlp_b2);
  add("mlp_w3", w.mlp_w3);
  add("mlp_b3", w.mlp_b3);
}

template <typename To, typename From>
Tensor<To> convert(const Tensor<From>& t) {
  if (!t.defined()) return {};
  return Tensor<To>::from(t.shape(), std::vector<To>(t.data().begin(), t.data().end()),
                          t.requires_grad());
}

template <typename To, typename From>
TowerWeights<To> convert_tower(const TowerWeights<From>& w) {
  TowerWeights<To> o;
  o.input_weight = convert<To>(w.input_weight);
  o.input_bias = convert<To>(w.input_bias);
  o.cls = convert<To>(w.cls);
  o.temporal = convert<To>(w.temporal);
  for (const auto& lw : w.layers) {
    LayerWeights<To> l;
    l.ln1_gain = convert<To>(lw.ln1_gain);
    l.ln1_bias = convert<To>(lw.ln1_bias);
    l.qkv_weight = convert<To>(lw.qkv_weight);
    l.qkv_bias = convert<To>(lw.qkv_bias);
    l.out_weight = convert<To>(lw.out_weight);
    l.out_bias = convert<To>(lw.out_bias);
    l.ln2_gain = convert<To>(lw.ln2_gain);
    l.ln2_bias = convert<To>(lw.ln2_bias);
    l.ffn_in_weight = convert<To>(lw.ffn_in_weight);
    l.ffn_in_bias = convert<To>(lw.ffn_in_bias);
    l.ffn_out_weight = convert<To>(lw.ffn_out_weight);
    l.ffn_out_bias = convert<To>(lw.ffn_out_bias);
    o.layers.push_back(std::move(l));
  }
  o.final_gain = convert<To>(w.final_gain);
  o.final_bias = convert<To>(w.final_bias);
  o.mlp_w1 = convert<To>(w.mlp_w1);
  o.mlp_b1 = convert<To>(w.mlp_b1);
  o.mlp_w2 = convert<To>(w.mlp_w2);
  o.mlp_b2 = convert<To>(w.mlp_b2);
  o.mlp_w3 = convert<To>(w.mlp_w3);
  o.mlp_b3 = convert<To>(w.mlp_b3);
  return o;
}

template <typename T>
Tensor<T> mlp_forward(const TowerWeights<T>& w, const Tensor<T>& x) {
  auto h = nc::gelu(nc::add(nc::matmul(x, w.mlp_w1), w.mlp_b1));
  h = nc::gelu(nc::add(nc::matmul(h, w.mlp_w2), w.mlp_b2));
  return nc::add(nc::matmul(h, w.mlp_w3), w.mlp_b3);
}

template <typename T>
Tensor<T> self_attention(const LayerWeights<T>& lw, const Tensor<T>& x, std::size_t heads,
                         std::vector<Matrix>* maps) {
  const std::size_t d = x.cols(), dk = d / heads, n = x.rows();
  auto qkv = nc::add(nc::matmul(x, lw.qkv_weight), lw.qkv_bias);
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dk));
  std::vector<Tensor<T>> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto q = nc::slice_cols(qkv, h * dk, (h + 1) * dk);
    auto k = nc::slice_cols(qkv, d + h * dk, d + (h + 1) * dk);
    auto v = nc::slice_cols(qkv, 2 * d + h * dk, 2 * d + (h + 1) * dk);
    auto probs = nc::softmax_rows(nc::scale(nc::matmul(q, nc::transpose(k)), inv_sqrt));
    if (maps != nullptr) {
      Matrix m(n, n);
      for (std::size_t i = 0; i < n * n; ++i) m.values[i] = static_cast<float>(probs.data()[i]);
      maps->push_back(std::move(m));
    }
    outs.push_back(nc::matmul(probs, v));
  }
  auto merged = heads == 1 ? outs.front() : nc::concat_cols(outs);
  return nc::add(nc::matmul(merged, lw.out_weight), lw.out_bias);
}

template <typename T>
EncodeResult<T> transformer_forward(const ModelConfig& c, const TowerWeights<T>& w,
                                    const Tensor<T>& features, AttentionMaps* attention) {
  const std::size_t len = features.rows();
  auto h = nc::add(nc::matmul(features, w.input_weight), w.input_bias);
  if (w.temporal.defined()) h = nc::add(h, nc::slice_rows(w.temporal, 0, len));
  auto x = nc::concat_rows(std::vector<Tensor<T>>{w.cls, h});
  if (attention != nullptr) attention->clear();
  for (const auto& lw : w.layers) {
    std::vector<Matrix>* maps = nullptr;
    if (attention != nullptr) maps = &attention->emplace_back();
    x = nc::add(x, self_attention(lw, nc::layer_norm(x, lw.ln1_gain, lw.ln1_bias), c.heads, maps));
    auto n2 = nc::layer_norm(x, lw.ln2_gain, lw.ln2_bias);
    auto ff = nc::gelu(nc::add(nc::matmul(n2, lw.ffn_in_weight), lw.ffn_in_bias));
    x = nc::add(x, nc::add(nc::matmul(ff, lw.ffn_out_weight), lw.ffn_out_bias));
  }
  auto out = nc::layer_norm(x, w.final_gain, w.final_bias);
  return {nc::slice_rows(out, 1, len + 1), nc::slice_rows(out, 0, 1)};
}

}  // namespace

template <typename T>
std::vector<NamedTensor<T>> Model<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  append_tower(out, "visual", visual);
  append_tower(out, "music", music);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += t.numel();
  return n;
}

template <typename T>
std::size_t Model<T>::parameter_count(Modality m) const {
  std::vector<NamedTensor<T>> out;
  append_tower(out, std::string(to_string(m)), tower(m));
  std::size_t n = 0;
  for (const auto& [name, t] : out) n += t.numel();
  return n;
}

template <typename T>
Model<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Initializer init(seed);
  Model<T> model;
  model.config = config;
  model.visual = init_tower<T>(config, Modality::kVisual, init);
  model.music = init_tower<T>(config, Modality::kMusic, init);
  return model;
}

template <typename To, typename From>
Model<To> convert_model(const Model<From>& model) {
  Model<To> out;
  out.config = model.config;
  out.visual = convert_tower<To>(model.visual);
  out.music = convert_tower<To>(model.music);
  return out;
}

template <typename T>
EncodeResult<T> encode_tensor(const Model<T>& model, Modality modality,
                              const Tensor<T>& features, AttentionMaps* attention) {
  const auto& c = model.config;
  if (features.cols() != c.d_in(modality)) {
    throw ShapeError("encode: " + std::string(to_string(modality)) + " features have dim " +
                     std::to_string(features.cols()) + ", model expects " +
                     std::to_string(c.d_in(modality)));
  }
  const auto& w = model.tower(modality);
  if (c.arch == Architecture::kMlp) {
    if (attention != nullptr) attention->clear();
    return {mlp_forward(w, features), mlp_forward(w, nc::mean_axis(features, 0))};
  }
  if (features.rows() > c.max_len) {
    throw ShapeError("encode: sequence of " + std::to_string(features.rows()) +
                     " segments exceeds max_len " + std::to_string(c.max_len));
  }
  return transformer_forward(c, w, features, attention);
}

EmbeddingSet encode(const FeatureSequence& seq, const Model<float>& model,
                    AttentionMaps* attention) {
  if (seq.length() == 0) throw ShapeError("encode: empty sequence '" + seq.track_id + "'");
  auto features = Tensor<float>::from({seq.length(), seq.dim()}, seq.features.values);
  numcore::Tape<float>::Pause no_grad;
  auto result = encode_tensor(model, seq.modality, features, attention);
  EmbeddingSet out;
  out.track_id = seq.track_id;
  out.modality = seq.modality;
  out.per_segment = Matrix(result.per_segment.rows(), result.per_segment.cols());
  std::copy(result.per_segment.data().begin(), result.per_segment.data().end(),
            out.per_segment.values.begin());
  out.track.assign(result.track.data().begin(), result.track.data().end());
  return out;
}

std::vector<float> mlp_encode(std::span<const float> feature, const Model<float>& model,
                              Modality modality) {
  if (model.config.arch != Architecture::kMlp) {
    throw ConfigError("mlp_encode: model is not an MLP");
  }
  if (feature.size() != model.config.d_in(modality)) {
    throw ShapeError("mlp_encode: feature dim " + std::to_string(feature.size()) +
                     " does not match d_in " + std::to_string(model.config.d_in(modality)));
  }
  numcore::Tape<float>::Pause no_grad;
  auto x = Tensor<float>::from({1, feature.size()}, {feature.begin(), feature.end()});
  auto y = mlp_forward(model.tower(modality), x);
  return {y.data().begin(), y.data().end()};
}

template struct Model<float>;
template struct Model<double>;
template Model<float> init_model<float>(const ModelConfig&, std::uint64_t);
template Model<double> init_model<double>(const ModelConfig&, std::uint64_t);
template Model<double> convert_model<double, float>(const Model<float>&);
template Model<float> convert_model<float, double>(const Model<double>&);
template Model<float> convert_model<float, float>(const Model<float>&);
template EncodeResult<float> encode_tensor<float>(const Model<float>&, Modality,
                                                  const Tensor<float>&, AttentionMaps*);
template EncodeResult<double> encode_tensor<double>(const Model<double>&, Modality,
                                                    const Tensor<double>&, AttentionMaps*);

}  // namespace mvpt::model
