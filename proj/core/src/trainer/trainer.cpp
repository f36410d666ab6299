#include "mvpt/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <json.hpp>
#include <numbers>
#include <numeric>

#include "../binary_io.hpp"
#include "mvpt/error.hpp"
#include "mvpt/model/checkpoint.hpp"
#include "mvpt/numcore/ops.hpp"

namespace mvpt::trainer {

namespace nc = numcore;
using objective::Level;
using objective::LossKind;
using objective::LossParts;

std::size_t window_start(std::size_t length, std::size_t window, WindowMode mode, std::mt19937_64& rng) {
  if (window == 0) throw ValueError("sample_window: window must be at least 1");
  if (length == 0) throw ValueError("sample_window: empty sequence");
  if (length <= window) return 0;
  if (mode == WindowMode::kCenter) return (length - window) / 2;
  return std::uniform_int_distribution<std::size_t>(0, length - window)(rng);
}

FeatureSequence slice_segments(const FeatureSequence& seq, std::size_t begin, std::size_t end) {
  FeatureSequence out;
  out.track_id = seq.track_id;
  out.modality = seq.modality;
  out.segment_duration = seq.segment_duration;
  out.labels = seq.labels;
  out.features = Matrix(end - begin, seq.dim());
  std::copy(seq.features.values.begin() + static_cast<std::ptrdiff_t>(begin * seq.dim()),
            seq.features.values.begin() + static_cast<std::ptrdiff_t>(end * seq.dim()),
            out.features.values.begin());
  return out;
}

FeatureSequence sample_window(const FeatureSequence& seq, std::size_t window, WindowMode mode,
                              std::mt19937_64& rng) {
  const std::size_t start = window_start(seq.length(), window, mode, rng);
  if (start == 0 && seq.length() <= window) return seq;
  return slice_segments(seq, start, start + window);
}

TrackPair sample_window(const TrackPair& pair, std::size_t window, WindowMode mode, std::mt19937_64& rng) {
  const std::size_t len = pair.visual.length();
  if (pair.music.length() != len) throw ValueError("sample_window: pair lengths differ");
  const std::size_t start = window_start(len, window, mode, rng);
  if (len <= window) return pair;
  return {slice_segments(pair.visual, start, start + window), slice_segments(pair.music, start, start + window)};
}

double cosine_lr(std::size_t step, std::size_t total_steps, double initial_lr) {
  if (total_steps == 0) throw ValueError("cosine_lr: total_steps must be positive");
  if (step > total_steps) {
    throw ValueError("cosine_lr: step " + std::to_string(step) + " exceeds total_steps " +
                     std::to_string(total_steps));
  }
  if (step == total_steps) return 0.0;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return initial_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, const std::vector<std::span<const T>>& grads,
                OptimizerState& state, double lr, const AdamWParams& opt) {
  if (params.size() != grads.size()) throw ShapeError("adamw_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].empty() && grads[i].size() != params[i].numel()) {
      throw ShapeError("adamw_step: gradient " + std::to_string(i) + " has the wrong size");
    }
    for (T g : grads[i]) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NonFiniteError("adamw_step: non-finite gradient for parameter " + std::to_string(i));
      }
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adamw_step: optimizer state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t), c2 = 1.0 - std::pow(opt.beta2, t);
  const double decay = 1.0 - lr * opt.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = grads[i].empty() ? 0.0 : static_cast<double>(grads[i][k]);
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g;
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g * g;
      double x = static_cast<double>(p[k]) * decay;
      x -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt.eps);
      p[k] = static_cast<T>(x);
    }
  }
}

template void adamw_step<float>(std::vector<Tensor<float>>&, const std::vector<std::span<const float>>&,
                                OptimizerState&, double, const AdamWParams&);
template void adamw_step<double>(std::vector<Tensor<double>>&, const std::vector<std::span<const double>>&,
                                 OptimizerState&, double, const AdamWParams&);

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ConfigError("train: initial_lr must be positive");
  if (total_steps == 0) throw ConfigError("train: total_steps must be at least 1");
  if (batch_tracks < 2) throw ConfigError("train: batch_tracks must be at least 2");
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) || !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(adamw.eps > 0.0)) throw ConfigError("train: eps must be positive");
  if (!(adamw.weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
  if (!(margin >= 0.0f)) throw ConfigError("train: margin must be non-negative");
  if (!(grad_clip >= 0.0)) throw ConfigError("train: grad_clip must be non-negative");
}

namespace {

Tensor<float> to_tensor(const Matrix& m) { return Tensor<float>::from({m.rows, m.cols}, m.values); }

// Index of a uniformly drawn other row, for every row.
std::vector<std::size_t> draw_negatives(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> out(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    out[i] = j >= i ? j + 1 : j;
  }
  return out;
}

}  // namespace

LossParts<float> batch_loss(const model::Model<float>& model, const std::vector<TrackPair>& batch,
                            const TrainConfig& config, std::mt19937_64& rng) {
  std::vector<Tensor<float>> vis, mus;
  for (const auto& pair : batch) {
    auto v = model::encode_tensor(model, Modality::kVisual, to_tensor(pair.visual.features));
    auto m = model::encode_tensor(model, Modality::kMusic, to_tensor(pair.music.features));
    if (config.level == Level::kSegment) {
      vis.push_back(v.per_segment);
      mus.push_back(m.per_segment);
    } else {
      vis.push_back(v.track);
      mus.push_back(m.track);
    }
  }
  const auto yv = nc::concat_rows(vis), ym = nc::concat_rows(mus);
  if (config.loss == LossKind::kInfoNce) return objective::infonce(yv, ym, model.config.temperature);
  if (yv.rows() < 2) throw ShapeError("triplet: need at least 2 items per batch");
  const auto neg_m = draw_negatives(ym.rows(), rng);
  const auto neg_v = draw_negatives(yv.rows(), rng);
  auto v2m = objective::triplet(yv, ym, nc::gather_rows(ym, neg_m), config.margin);
  auto m2v = objective::triplet(ym, yv, nc::gather_rows(yv, neg_v), config.margin);
  return {nc::add(v2m, m2v), v2m, m2v};
}

void write_history(const std::filesystem::path& path, const std::vector<HistoryRecord>& history) {
  std::string text;
  for (const auto& h : history) {
    nlohmann::json rec = {{"step", h.step}, {"loss", h.loss}, {"loss_v2m", h.loss_v2m},
                          {"loss_m2v", h.loss_m2v}, {"lr", h.lr}};
    text += rec.dump() + "\n";
  }
  detail::write_text(path, text);
}

FitResult fit(const PairedDataset& data, const model::ModelConfig& model_config, const TrainConfig& config,
              const FitOptions& options) {
  config.validate();
  return fit(data, model::init_model<float>(model_config, config.seed), config, options);
}

FitResult fit(const PairedDataset& data, model::Model<float> initial, const TrainConfig& config,
              const FitOptions& options) {
  config.validate();
  initial.config.validate();
  if (data.size() < 2) throw ValueError("fit: need at least 2 tracks");
  data.validate();

  FitResult result{std::move(initial), {}};
  auto& model = result.model;
  std::vector<Tensor<float>> params;
  for (auto& [name, t] : model.parameters()) params.push_back(t);

  // The init consumes config.seed directly; batches draw from a derived stream.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t window = config.window == 0 ? model.config.max_len : config.window;
  const std::size_t batch_size = std::min(config.batch_tracks, data.size());
  std::vector<std::size_t> order(data.size());
  OptimizerState state;
  nc::Tape<float> tape;

  auto flush = [&] {
    if (!options.history.empty()) write_history(options.history, result.history);
  };
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first batch_size entries are a uniform sample.
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<TrackPair> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      batch.push_back(sample_window(data.pairs[order[i]], window, WindowMode::kRandom, rng));
    }

    auto diverge = [&] {
      tape.clear();
      flush();
      if (!options.checkpoint.empty()) model::save_checkpoint(options.checkpoint, model);
      throw TrainingDiverged("fit: non-finite loss, gradient or update at step " + std::to_string(step) +
                             "; kept the weights from before this step");
    };
    for (auto& p : params) p.zero_grad();
    tape.clear();
    LossParts<float> parts;
    try {
      nc::Tape<float>::Scope scope(tape);
      parts = batch_loss(model, batch, config, rng);
    } catch (const NonFiniteError&) {
      diverge();
    }
    const double loss = parts.total.item();
    bool finite = std::isfinite(loss);
    if (finite) nc::backward(tape, parts.total);
    std::vector<std::span<const float>> grads;
    double norm2 = 0.0;
    for (const auto& p : params) {
      grads.push_back(p.grad());
      for (float g : p.grad()) norm2 += static_cast<double>(g) * g;
    }
    if (!finite || !std::isfinite(norm2)) diverge();
    std::vector<std::vector<float>> clipped;
    if (config.grad_clip > 0.0 && std::sqrt(norm2) > config.grad_clip) {
      const double factor = config.grad_clip / std::sqrt(norm2);
      clipped.reserve(grads.size());
      for (auto& g : grads) {
        auto& c = clipped.emplace_back(g.begin(), g.end());
        for (auto& x : c) x = static_cast<float>(x * factor);
        g = c;
      }
    }
    const double lr = cosine_lr(step, config.total_steps, config.initial_lr);
    std::vector<std::vector<float>> before;
    before.reserve(params.size());
    for (const auto& p : params) before.emplace_back(p.data().begin(), p.data().end());
    adamw_step(params, grads, state, lr, config.adamw);
    const bool overflow = std::ranges::any_of(params, [](const Tensor<float>& p) {
      return std::ranges::any_of(p.data(), [](float v) { return !std::isfinite(v); });
    });
    if (overflow) {
      for (std::size_t i = 0; i < params.size(); ++i) std::ranges::copy(before[i], params[i].mutable_data().begin());
      diverge();
    }
    tape.clear();
    result.history.push_back({step, loss, parts.v2m.item(), parts.m2v.item(), lr});

    if (options.progress != nullptr && config.total_steps >= 10 && (step + 1) % (config.total_steps / 10) == 0) {
      char line[96];
      std::snprintf(line, sizeof line, "step %zu/%zu loss %.4f lr %.2e\n", step + 1, config.total_steps, loss, lr);
      *options.progress << line;
    }
    if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0 && !options.checkpoint.empty()) {
      model::save_checkpoint(options.checkpoint, model);
    }
  }
  for (auto& p : params) p.zero_grad();
  if (!options.checkpoint.empty()) model::save_checkpoint(options.checkpoint, model);
  flush();
  return result;
}

}  // namespace mvpt::trainer
