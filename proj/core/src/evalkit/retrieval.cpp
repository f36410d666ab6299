#include "mvpt/evalkit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "mvpt/error.hpp"
#include "mvpt/evalkit/metrics.hpp"
#include "mvpt/trainer/trainer.hpp"

namespace mvpt::evalkit {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kV2M:
      return "v2m";
    case Direction::kM2V:
      return "m2v";
    case Direction::kBoth:
      return "both";
  }
  return "both";
}

Direction parse_direction(std::string_view text) {
  if (text == "v2m") return Direction::kV2M;
  if (text == "m2v") return Direction::kM2V;
  if (text == "both") return Direction::kBoth;
  throw ConfigError("unknown direction '" + std::string(text) + "' (expected v2m|m2v|both)");
}

void EvalConfig::validate() const {
  if (pool_size < 2) throw ConfigError("eval: pool_size must be at least 2");
  if (ks.empty()) throw ConfigError("eval: ks must not be empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == 0 || ks[i] > pool_size) throw ConfigError("eval: every K must lie in [1, pool_size]");
    if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("eval: ks must be strictly ascending");
  }
}

double RetrievalReport::average_recall(std::size_t k) const {
  double sum = 0.0;
  int n = 0;
  for (const auto* d : {&v2m, &m2v}) {
    if (!d->has_value()) continue;
    const auto it = (*d)->recall.find(k);
    if (it == (*d)->recall.end()) throw ValueError("report has no R@" + std::to_string(k));
    sum += it->second;
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

std::vector<TrackEmbeddings> embed_dataset(const model::Model<float>& model, const PairedDataset& data,
                                           std::size_t window) {
  const std::size_t w = window == 0 ? model.config.max_len : window;
  std::mt19937_64 unused(0);
  std::vector<TrackEmbeddings> out;
  out.reserve(data.size());
  for (const auto& pair : data.pairs) {
    const auto p = trainer::sample_window(pair, w, trainer::WindowMode::kCenter, unused);
    out.push_back({model::encode(p.visual, model), model::encode(p.music, model)});
  }
  return out;
}

namespace {

// One retrieval item: a segment (or a whole track) in both modalities.
struct Item {
  std::span<const float> visual;
  std::span<const float> music;
  std::size_t track = 0;
  std::size_t length = 0;  // segments in the item's track
};

std::vector<Item> flatten(const std::vector<TrackEmbeddings>& tracks, Level level) {
  std::vector<Item> items;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& tr = tracks[t];
    if (tr.visual.length() != tr.music.length()) {
      throw ValueError("track '" + tr.visual.track_id + "' has mismatched embedding lengths");
    }
    if (level == Level::kTrack) {
      items.push_back({tr.visual.track, tr.music.track, t, tr.length()});
    } else {
      for (std::size_t l = 0; l < tr.length(); ++l) {
        items.push_back({tr.visual.per_segment.row(l), tr.music.per_segment.row(l), t, tr.length()});
      }
    }
  }
  return items;
}

// Sorted candidate indices for item `q`, including q itself.
std::vector<std::size_t> sample_pool(std::size_t q, std::size_t n_items, std::size_t pool,
                                     std::mt19937_64& rng) {
  // Floyd's algorithm over the n_items - 1 other indices.
  std::vector<std::size_t> chosen;
  chosen.reserve(pool);
  const std::size_t n = n_items - 1, k = pool - 1;
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const bool seen = std::find(chosen.begin(), chosen.end(), t) != chosen.end();
    chosen.push_back(seen ? j : t);
  }
  for (auto& c : chosen) {
    if (c >= q) ++c;
  }
  chosen.push_back(q);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

double mean_r10(const RetrievalReport& r) {
  double sum = 0.0;
  int n = 0;
  for (const auto* d : {&r.v2m, &r.m2v}) {
    if (d->has_value()) {
      sum += recall_at_k((*d)->ranks, 10);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

DirectionReport summarize(std::vector<std::size_t> ranks, const EvalConfig& config) {
  DirectionReport d;
  for (auto k : config.ks) d.recall[k] = recall_at_k(ranks, k);
  d.median_rank = ranks.empty() ? 0 : median_rank(ranks);
  d.ranks = std::move(ranks);
  return d;
}

// Shared driver. `query_of` may substitute query embeddings (perturbation);
// `constrained` drops different-length candidates.
RetrievalReport run_eval(const std::vector<Item>& items, const std::vector<Item>& queries,
                         const EvalConfig& config, bool constrained) {
  config.validate();
  if (items.size() < 2) throw ValueError("evaluate: need at least 2 candidates");
  if (config.pool_size > items.size()) {
    throw ValueError("evaluate: pool_size " + std::to_string(config.pool_size) + " exceeds the " +
                     std::to_string(items.size()) + " available candidates");
  }
  std::mt19937_64 rng(config.seed);
  const bool do_v2m = config.direction != Direction::kM2V;
  const bool do_m2v = config.direction != Direction::kV2M;
  std::vector<std::size_t> v2m, m2v;
  RetrievalReport report;
  report.config = config;
  std::map<std::size_t, double> pool_sum;
  std::vector<double> scores;
  std::vector<std::size_t> kept;
  for (std::size_t q = 0; q < items.size(); ++q) {
    const auto pool = sample_pool(q, items.size(), config.pool_size, rng);
    kept.clear();
    for (auto c : pool) {
      if (!constrained || items[c].length == items[q].length) kept.push_back(c);
    }
    if (kept.size() < 2) {
      ++report.skipped_queries;
      continue;
    }
    if (constrained) {
      auto& cls = report.length_classes[items[q].length];
      ++cls.queries;
      pool_sum[items[q].length] += static_cast<double>(kept.size());
    }
    const std::size_t truth = static_cast<std::size_t>(std::find(kept.begin(), kept.end(), q) - kept.begin());
    scores.resize(kept.size());
    if (do_v2m) {
      for (std::size_t j = 0; j < kept.size(); ++j) {
        scores[j] = objective::cosine_similarity(queries[q].visual, items[kept[j]].music);
      }
      v2m.push_back(rank_of_truth(scores, truth));
    }
    if (do_m2v) {
      for (std::size_t j = 0; j < kept.size(); ++j) {
        scores[j] = objective::cosine_similarity(queries[q].music, items[kept[j]].visual);
      }
      m2v.push_back(rank_of_truth(scores, truth));
    }
  }
  if (report.skipped_queries > 0) {
    std::cerr << "warning: skipped " << report.skipped_queries
              << " queries with fewer than 2 same-length candidates\n";
  }
  for (auto& [len, cls] : report.length_classes) cls.mean_pool = pool_sum[len] / static_cast<double>(cls.queries);
  if (do_v2m) report.v2m = summarize(std::move(v2m), config);
  if (do_m2v) report.m2v = summarize(std::move(m2v), config);
  return report;
}

}  // namespace

RetrievalReport evaluate(const std::vector<TrackEmbeddings>& tracks, const EvalConfig& config) {
  const auto items = flatten(tracks, config.level);
  return run_eval(items, items, config, false);
}

RetrievalReport evaluate(const model::Model<float>& model, const PairedDataset& data, const EvalConfig& config) {
  config.validate();
  return evaluate(embed_dataset(model, data, config.window), config);
}

RetrievalReport length_constrained_evaluate(const std::vector<TrackEmbeddings>& tracks,
                                            const EvalConfig& config) {
  const auto items = flatten(tracks, config.level);
  return run_eval(items, items, config, true);
}

RetrievalReport length_constrained_evaluate(const model::Model<float>& model, const PairedDataset& data,
                                            const EvalConfig& config) {
  config.validate();
  return length_constrained_evaluate(embed_dataset(model, data, config.window), config);
}

std::vector<SweepPoint> context_sweep(const model::Model<float>& model, const PairedDataset& data,
                                      const std::vector<std::size_t>& lengths, const EvalConfig& config) {
  config.validate();
  if (config.level != Level::kSegment) throw ConfigError("context_sweep: segment level only");
  const std::size_t w = config.window == 0 ? model.config.max_len : config.window;
  std::mt19937_64 unused(0);
  std::vector<TrackPair> windowed;
  for (const auto& pair : data.pairs) {
    windowed.push_back(trainer::sample_window(pair, w, trainer::WindowMode::kCenter, unused));
  }
  std::vector<SweepPoint> out;
  for (const std::size_t ell : lengths) {
    if (ell == 0) throw ConfigError("context_sweep: lengths must be positive");
    std::vector<TrackEmbeddings> tracks;
    double seconds = 0.0;
    for (const auto& pair : windowed) {
      const std::size_t len = pair.visual.length();
      seconds = static_cast<double>(std::min(ell, len)) * pair.visual.segment_duration;
      if (ell >= len) {
        tracks.push_back({model::encode(pair.visual, model), model::encode(pair.music, model)});
        continue;
      }
      TrackEmbeddings te;
      for (auto* set : {&te.visual, &te.music}) {
        const auto m = set == &te.visual ? Modality::kVisual : Modality::kMusic;
        const auto& seq = pair.get(m);
        set->track_id = seq.track_id;
        set->modality = m;
        for (std::size_t l = 0; l < len; ++l) {
          const std::size_t start = std::min(l - std::min(l, ell / 2), len - ell);
          const auto e = model::encode(trainer::slice_segments(seq, start, start + ell), model);
          if (set->per_segment.empty()) set->per_segment = Matrix(len, e.per_segment.cols);
          std::copy(e.per_segment.row(l - start).begin(), e.per_segment.row(l - start).end(),
                    set->per_segment.row(l).begin());
        }
      }
      tracks.push_back(std::move(te));
    }
    auto report = evaluate(tracks, config);
    const double r10 = mean_r10(report);
    out.push_back({seconds, ell, r10, std::move(report)});
  }
  return out;
}

std::string_view to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::kScale:
      return "scale";
    case PerturbKind::kNoise:
      return "noise";
    case PerturbKind::kStretch:
      return "stretch";
  }
  return "scale";
}

PerturbKind parse_perturb_kind(std::string_view text) {
  if (text == "scale") return PerturbKind::kScale;
  if (text == "noise") return PerturbKind::kNoise;
  if (text == "stretch") return PerturbKind::kStretch;
  throw ConfigError("unknown perturbation '" + std::string(text) + "' (expected scale|noise|stretch)");
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Perturbation make_perturbation(PerturbKind kind, std::uint64_t seed) {
  switch (kind) {
    case PerturbKind::kScale:
      return [](const FeatureSequence& s, double r) {
        Matrix out = s.features;
        for (auto& v : out.values) v = static_cast<float>(v * r);
        return out;
      };
    case PerturbKind::kNoise:
      return [seed](const FeatureSequence& s, double r) {
        Matrix out = s.features;
        const double sd = std::abs(r - 1.0);
        if (sd == 0.0) return out;
        std::mt19937_64 rng(fnv1a(s.track_id, seed));
        std::normal_distribution<double> noise(0.0, sd);
        for (auto& v : out.values) v = static_cast<float>(v + noise(rng));
        return out;
      };
    case PerturbKind::kStretch:
      return [](const FeatureSequence& s, double r) {
        if (!(r > 0.0)) throw ValueError("stretch: factor must be positive");
        Matrix out(s.length(), s.dim());
        for (std::size_t l = 0; l < s.length(); ++l) {
          const auto src = std::min<std::size_t>(
              static_cast<std::size_t>(std::llround(static_cast<double>(l) * r)), s.length() - 1);
          std::copy(s.features.row(src).begin(), s.features.row(src).end(), out.row(l).begin());
        }
        return out;
      };
  }
  throw ConfigError("unknown perturbation kind");
}

std::vector<SweepPoint> perturbation_sweep(const model::Model<float>& model, const PairedDataset& data,
                                           const Perturbation& perturb, const std::vector<double>& r_values,
                                           const EvalConfig& config) {
  config.validate();
  const std::size_t w = config.window == 0 ? model.config.max_len : config.window;
  std::mt19937_64 unused(0);
  std::vector<TrackPair> windowed;
  for (const auto& pair : data.pairs) {
    windowed.push_back(trainer::sample_window(pair, w, trainer::WindowMode::kCenter, unused));
  }
  for (const auto& pair : windowed) {
    for (const auto* seq : {&pair.visual, &pair.music}) {
      const Matrix same = perturb(*seq, 1.0);
      if (same.rows != seq->features.rows || same.cols != seq->features.cols) {
        throw ValueError("perturbation at r = 1 changed the feature shape");
      }
      for (std::size_t i = 0; i < same.values.size(); ++i) {
        if (std::abs(same.values[i] - seq->features.values[i]) > 1e-6f) {
          throw ValueError("perturbation at r = 1 is not the identity (track '" + seq->track_id + "')");
        }
      }
    }
  }
  std::vector<TrackEmbeddings> clean;
  for (const auto& pair : windowed) clean.push_back({model::encode(pair.visual, model), model::encode(pair.music, model)});
  const auto items = flatten(clean, config.level);

  std::vector<SweepPoint> out;
  for (const double r : r_values) {
    std::vector<TrackEmbeddings> perturbed;
    for (const auto& pair : windowed) {
      FeatureSequence v = pair.visual, m = pair.music;
      v.features = perturb(pair.visual, r);
      m.features = perturb(pair.music, r);
      perturbed.push_back({model::encode(v, model), model::encode(m, model)});
    }
    // Perturbed embeddings act as queries only; candidates stay clean.
    const auto queries = flatten(perturbed, config.level);
    auto report = run_eval(items, queries, config, false);
    const double r10 = mean_r10(report);
    out.push_back({r, 0, r10, std::move(report)});
  }
  return out;
}

}  // namespace mvpt::evalkit
