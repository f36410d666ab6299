#include "mvpt/dataio/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "mvpt/error.hpp"

namespace mvpt::dataio {

void SyntheticSpec::validate() const {
  if (n_tracks == 0) throw ConfigError("synthetic: n_tracks must be positive");
  if (d_latent == 0 || d_v == 0 || d_m == 0) throw ConfigError("synthetic: dimensions must be positive");
  if (length == 0 && length_choices.empty()) throw ConfigError("synthetic: length must be positive");
  for (auto l : length_choices) {
    if (l == 0) throw ConfigError("synthetic: length_choices must be positive");
  }
  if (!(context_weight >= 0.0 && context_weight <= 1.0)) {
    throw ConfigError("synthetic: context_weight must lie in [0, 1]");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be non-negative");
  if (!(projection_std > 0.0)) throw ConfigError("synthetic: projection_std must be positive");
  if (!(segment_duration > 0.0f)) throw ConfigError("synthetic: segment_duration must be positive");
  if (n_genres > d_latent) throw ConfigError("synthetic: n_genres cannot exceed d_latent");
  if (!(attribute_rate >= 0.0 && attribute_rate <= 1.0)) {
    throw ConfigError("synthetic: attribute_rate must lie in [0, 1]");
  }
}

namespace {

Matrix projection(std::size_t rows, std::size_t cols, double std_dev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std_dev);
  Matrix a(rows, cols);
  for (auto& v : a.values) v = static_cast<float>(dist(rng));
  return a;
}

Matrix project(const Matrix& s, const Matrix& a, double noise_std, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix out(s.rows, a.cols);
  for (std::size_t l = 0; l < s.rows; ++l) {
    for (std::size_t c = 0; c < a.cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s.cols; ++k) acc += static_cast<double>(s(l, k)) * a(k, c);
      out(l, c) = static_cast<float>(acc + noise_std * noise(rng));
    }
  }
  return out;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const std::size_t dl = spec.d_latent;

  SyntheticData out;
  const Matrix a_v = projection(dl, spec.d_v, spec.projection_std, rng);
  const Matrix a_m = projection(dl, spec.d_m, spec.projection_std, rng);
  out.attribute_direction.resize(dl);
  double norm = 0.0;
  for (auto& v : out.attribute_direction) {
    v = static_cast<float>(unit(rng));
    norm += static_cast<double>(v) * v;
  }
  for (auto& v : out.attribute_direction) v = static_cast<float>(v / std::sqrt(norm));

  const double wg = std::sqrt(spec.context_weight), wz = std::sqrt(1.0 - spec.context_weight);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int id_width = static_cast<int>(std::to_string(spec.n_tracks - 1).size());
  out.dataset.split = Split::kTrain;
  for (std::size_t i = 0; i < spec.n_tracks; ++i) {
    std::size_t len = spec.length;
    if (!spec.length_choices.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, spec.length_choices.size() - 1);
      len = spec.length_choices[pick(rng)];
    }
    std::vector<double> g(dl);
    for (auto& v : g) v = unit(rng);
    std::map<std::string, std::string> labels;
    if (spec.n_genres > 0) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < spec.n_genres; ++k) {
        if (g[k] > g[best]) best = k;
      }
      labels["genre"] = "g" + std::to_string(best);
    }
    if (spec.attribute_rate > 0.0) {
      const bool has = coin(rng) < spec.attribute_rate;
      labels["attribute"] = has ? "yes" : "no";
      if (has) {
        for (std::size_t k = 0; k < dl; ++k) g[k] += spec.attribute_strength * out.attribute_direction[k];
      }
    }
    Matrix s(len, dl);
    std::vector<double> walk(dl, 0.0);
    for (std::size_t l = 0; l < len; ++l) {
      const double renorm = 1.0 / std::sqrt(static_cast<double>(l + 1));
      for (std::size_t k = 0; k < dl; ++k) {
        walk[k] += unit(rng);
        s(l, k) = static_cast<float>(wg * g[k] + wz * walk[k] * renorm);
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "t%0*zu", id_width, i);
    TrackPair pair;
    pair.visual = {id, Modality::kVisual, project(s, a_v, spec.noise_std, rng), spec.segment_duration, labels};
    pair.music = {id, Modality::kMusic, project(s, a_m, spec.noise_std, rng), spec.segment_duration, labels};
    out.dataset.pairs.push_back(std::move(pair));
    out.latents.push_back(std::move(s));
  }
  return out;
}

std::pair<PairedDataset, PairedDataset> split_dataset(const PairedDataset& data, std::size_t n_train) {
  if (n_train > data.size()) throw ValueError("split_dataset: n_train exceeds dataset size");
  PairedDataset train, test;
  train.split = Split::kTrain;
  test.split = Split::kTest;
  train.pairs.assign(data.pairs.begin(), data.pairs.begin() + static_cast<std::ptrdiff_t>(n_train));
  test.pairs.assign(data.pairs.begin() + static_cast<std::ptrdiff_t>(n_train), data.pairs.end());
  return {std::move(train), std::move(test)};
}

}  // namespace mvpt::dataio
