#include <benchmark/benchmark.h>

#include <random>

#include "mvpt/dataio/synthetic.hpp"
#include "mvpt/evalkit/retrieval.hpp"
#include "mvpt/model/encoder.hpp"
#include "mvpt/numcore/ops.hpp"
#include "mvpt/objective/losses.hpp"
#include "mvpt/trainer/trainer.hpp"

using namespace mvpt;
using numcore::Tensor;

namespace {

Tensor<float> random(std::mt19937_64& rng, std::size_t r, std::size_t c, bool grad = false) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(r * c);
  for (auto& x : v) x = n(rng);
  return Tensor<float>::from({r, c}, std::move(v), grad);
}

model::ModelConfig desk_model() {
  model::ModelConfig c;
  c.d_in_v = 16;
  c.d_in_m = 16;
  c.d_h = 32;
  c.layers = 2;
  c.heads = 2;
  c.max_len = 10;
  return c;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random(rng, n, n), b = random(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(numcore::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

// Inference of one 10-segment track through the desk transformer tower.
void BM_Encode(benchmark::State& state) {
  const auto m = model::init_model<float>(desk_model(), 1);
  std::mt19937_64 rng(2);
  FeatureSequence seq;
  seq.track_id = "b";
  seq.features = Matrix(10, 16);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& x : seq.features.values) x = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(model::encode(seq, m));
}
BENCHMARK(BM_Encode);

// InfoNCE forward and backward over M pairs.
void BM_InfoNce(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  auto v = random(rng, m, 32, true), u = random(rng, m, 32, true);
  for (auto _ : state) {
    numcore::Tape<float> tape;
    numcore::Tape<float>::Scope scope(tape);
    auto loss = objective::infonce(v, u, 0.3f).total;
    benchmark::DoNotOptimize(numcore::backward(tape, loss));
  }
}
BENCHMARK(BM_InfoNce)->Arg(64)->Arg(640);

// One optimizer step of the desk protocol: 64 tracks of 10 segments.
void BM_TrainStep(benchmark::State& state) {
  dataio::SyntheticSpec spec;
  spec.n_tracks = 64;
  const auto data = dataio::generate_synthetic(spec).dataset;
  trainer::TrainConfig cfg;
  cfg.total_steps = 1;
  cfg.batch_tracks = 64;
  for (auto _ : state) benchmark::DoNotOptimize(trainer::fit(data, desk_model(), cfg));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

// Segment-level evaluation of 128 test tracks, pool 200.
void BM_Evaluate(benchmark::State& state) {
  dataio::SyntheticSpec spec;
  const auto data = dataio::generate_synthetic(spec).dataset;
  const auto m = model::init_model<float>(desk_model(), 1);
  const auto tracks = evalkit::embed_dataset(m, data);
  evalkit::EvalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(evalkit::evaluate(tracks, cfg));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
