#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvpt/dataio/feature_sequence.hpp"
#include "mvpt/model/encoder.hpp"
#include "mvpt/objective/losses.hpp"

namespace mvpt::evalkit {

using objective::Level;

enum class Direction : std::uint8_t { kV2M, kM2V, kBoth };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

struct EvalConfig {
  std::size_t pool_size = 200;
  std::vector<std::size_t> ks{1, 5, 10};
  Level level = Level::kSegment;
  Direction direction = Direction::kBoth;
  std::uint64_t seed = 0;
  // Center window (segments) applied to every test track before encoding;
  // 0 uses the model's max_len.
  std::size_t window = 0;

  // Throws ConfigError: pool_size >= 2, ks ascending, each in [1, pool_size].
  void validate() const;
};

// Embeddings of one track in both modalities.
struct TrackEmbeddings {
  model::EmbeddingSet visual;
  model::EmbeddingSet music;

  const model::EmbeddingSet& get(Modality m) const { return m == Modality::kVisual ? visual : music; }
  std::size_t length() const { return visual.length(); }
};

// Center-windows each pair to `window` segments (0: model max_len) and encodes it.
std::vector<TrackEmbeddings> embed_dataset(const model::Model<float>& model, const PairedDataset& data,
                                           std::size_t window = 0);

struct DirectionReport {
  std::vector<std::size_t> ranks;     // one per query, in query order
  std::map<std::size_t, double> recall;  // K -> percent
  std::size_t median_rank = 0;
};

struct LengthClassStats {
  std::size_t queries = 0;
  double mean_pool = 0.0;  // effective pool size after exclusion
};

struct RetrievalReport {
  EvalConfig config;
  std::string model_id;
  std::optional<DirectionReport> v2m;
  std::optional<DirectionReport> m2v;
  // Filled by length_constrained_evaluate only.
  std::map<std::size_t, LengthClassStats> length_classes;
  std::size_t skipped_queries = 0;

  // Mean of R@k over the reported directions.
  double average_recall(std::size_t k) const;
};

// Pools: for each query item, the ground truth plus pool_size - 1 distinct
// other candidates drawn uniformly, listed in ascending candidate order. The
// same pools serve both directions. Segment level ranks every segment of every
// track against pools of segments; track level ranks tracks by their track
// embedding. Throws ValueError when pool_size exceeds the candidate count.
RetrievalReport evaluate(const std::vector<TrackEmbeddings>& tracks, const EvalConfig& config);
RetrievalReport evaluate(const model::Model<float>& model, const PairedDataset& data, const EvalConfig& config);

// Same pools as evaluate, but candidates from tracks whose length differs
// from the query's track are dropped from each pool before ranking. Queries
// left with fewer than 2 candidates are skipped (counted in skipped_queries,
// with a warning on stderr).
RetrievalReport length_constrained_evaluate(const std::vector<TrackEmbeddings>& tracks,
                                            const EvalConfig& config);
RetrievalReport length_constrained_evaluate(const model::Model<float>& model, const PairedDataset& data,
                                            const EvalConfig& config);

struct SweepPoint {
  double parameter = 0.0;  // context length in seconds, or perturbation factor r
  std::size_t length = 0;  // context length in segments (context sweep only)
  double recall10 = 0.0;   // average R@10 over directions
  RetrievalReport report;
};

// Segment-level evaluation where segment l of a track is encoded from an
// ell-segment window centred on l (shifted to stay inside the track), for
// each ell in `lengths`. ell >= track length is the standard evaluation.
std::vector<SweepPoint> context_sweep(const model::Model<float>& model, const PairedDataset& data,
                                      const std::vector<std::size_t>& lengths, const EvalConfig& config);

// Replaces the features of a sequence for a factor r; r = 1 must be the identity.
using Perturbation = std::function<Matrix(const FeatureSequence&, double r)>;

enum class PerturbKind : std::uint8_t { kScale, kNoise, kStretch };
std::string_view to_string(PerturbKind k);
PerturbKind parse_perturb_kind(std::string_view text);

// kScale: features * r. kNoise: features + N(0, |r - 1|^2), seeded from the
// track id and `seed`. kStretch: row l takes row clamp(round(l * r)), i.e. the
// sequence is played back r times faster with its length kept.
Perturbation make_perturbation(PerturbKind kind, std::uint64_t seed = 0);

// Perturbs the query-side features (visual for v2m, music for m2v), re-encodes
// the queries and ranks them against unperturbed candidates. Throws ValueError
// when perturb(., 1) moves any feature by more than 1e-6.
std::vector<SweepPoint> perturbation_sweep(const model::Model<float>& model, const PairedDataset& data,
                                           const Perturbation& perturb, const std::vector<double>& r_values,
                                           const EvalConfig& config);

}  // namespace mvpt::evalkit
