#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <random>
#include <vector>

#include "mvpt/dataio/feature_sequence.hpp"
#include "mvpt/model/encoder.hpp"
#include "mvpt/objective/losses.hpp"

namespace mvpt::trainer {

using numcore::Tensor;

enum class WindowMode : std::uint8_t { kRandom, kCenter };

// Start offset of an L-segment window in a sequence of `length` segments:
// 0 when length <= L, floor((length - L) / 2) for kCenter, uniform otherwise.
std::size_t window_start(std::size_t length, std::size_t window, WindowMode mode, std::mt19937_64& rng);

// Contiguous window of min(length, L) segments. Throws ValueError for an
// empty sequence or L = 0.
FeatureSequence sample_window(const FeatureSequence& seq, std::size_t window, WindowMode mode,
                              std::mt19937_64& rng);
// Same window offsets for both modalities.
TrackPair sample_window(const TrackPair& pair, std::size_t window, WindowMode mode, std::mt19937_64& rng);
FeatureSequence slice_segments(const FeatureSequence& seq, std::size_t begin, std::size_t end);

// initial_lr * 0.5 * (1 + cos(pi * step / total_steps)). Throws ValueError for
// step > total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, double initial_lr);

struct AdamWParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

// One decoupled-weight-decay Adam update with bias correction:
//   p *= 1 - lr * wd;  p -= lr * m_hat / (sqrt(v_hat) + eps)
// State is created on the first call. Throws ValueError on a non-finite
// gradient before touching any parameter.
template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, const std::vector<std::span<const T>>& grads,
                OptimizerState& state, double lr, const AdamWParams& opt);

struct TrainConfig {
  double initial_lr = 1e-3;
  std::size_t total_steps = 1000;
  std::size_t batch_tracks = 64;
  AdamWParams adamw;
  std::uint64_t seed = 0;
  objective::Level level = objective::Level::kSegment;
  objective::LossKind loss = objective::LossKind::kInfoNce;
  float margin = 0.2f;
  // Training window in segments; 0 uses the model's max_len.
  std::size_t window = 0;
  // Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
  // Checkpoint every N steps into FitOptions::checkpoint; 0 writes only the final one.
  std::size_t checkpoint_every = 0;

  // Throws ConfigError.
  void validate() const;
};

struct HistoryRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double loss_v2m = 0.0;
  double loss_m2v = 0.0;
  double lr = 0.0;
};

struct FitOptions {
  std::filesystem::path checkpoint;  // empty: no checkpoint files
  std::filesystem::path history;     // empty: no history file
  std::ostream* progress = nullptr;  // one line per 10% of steps when set
};

struct FitResult {
  model::Model<float> model;
  std::vector<HistoryRecord> history;
};

// Trains from a fresh init seeded by config.seed. A non-finite loss, gradient
// or updated weight aborts with TrainingDiverged; the weights from before the failing
// step are then written to the checkpoint path and the history so far is
// flushed.
FitResult fit(const PairedDataset& data, const model::ModelConfig& model_config,
              const TrainConfig& config, const FitOptions& options = {});

// Same, continuing from given weights.
FitResult fit(const PairedDataset& data, model::Model<float> initial, const TrainConfig& config,
              const FitOptions& options = {});

// Loss of one batch of (already windowed) pairs under the tape of the caller.
objective::LossParts<float> batch_loss(const model::Model<float>& model, const std::vector<TrackPair>& batch,
                                       const TrainConfig& config, std::mt19937_64& rng);

void write_history(const std::filesystem::path& path, const std::vector<HistoryRecord>& history);

}  // namespace mvpt::trainer
