#pragma once

// Synthetic paired features with a shared latent structure.
//
// Per track: g ~ N(0, I) (track latent), z_l a Gaussian random walk with
// z_l / sqrt(l+1) so every step has unit variance. The signal of segment l is
//   s_l = sqrt(rho) * g + sqrt(1 - rho) * z_l
// and the features are A_v s_l + noise, A_m s_l + noise, where A_v, A_m are
// drawn once per dataset with entries N(0, projection_std^2).
//
// Labels: "genre" is the argmax of the first n_genres coordinates of g. When
// attribute_rate > 0, a track is "attribute"="yes" with that probability and
// its g gets attribute_strength * u added, u a fixed unit vector.

#include <cstdint>
#include <vector>

#include "mvpt/dataio/feature_sequence.hpp"
#include "mvpt/numcore/matrix.hpp"

namespace mvpt::dataio {

struct SyntheticSpec {
  std::size_t n_tracks = 128;
  std::size_t length = 10;  // segments per track
  std::size_t d_latent = 8;
  std::size_t d_v = 16;
  std::size_t d_m = 16;
  double context_weight = 0.9;  // rho
  double noise_std = 0.5;
  // Std of the projection entries. Per-feature signal variance is
  // d_latent * projection_std^2 against noise_std^2.
  double projection_std = 0.15;
  float segment_duration = 1.0f;
  // When non-empty, each track's length is drawn uniformly from this list
  // (overrides `length`).
  std::vector<std::size_t> length_choices;
  std::size_t n_genres = 4;
  double attribute_rate = 0.0;
  double attribute_strength = 2.0;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

struct SyntheticData {
  PairedDataset dataset;
  // Per track: length x d_latent signal s_l (before projection and noise).
  std::vector<Matrix> latents;
  std::vector<float> attribute_direction;  // u, d_latent
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// First n_train tracks become the train split, the rest the test split.
std::pair<PairedDataset, PairedDataset> split_dataset(const PairedDataset& data, std::size_t n_train);

}  // namespace mvpt::dataio
