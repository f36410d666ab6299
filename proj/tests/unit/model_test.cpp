#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mvpt/error.hpp"
#include "mvpt/model/checkpoint.hpp"
#include "mvpt/model/encoder.hpp"
#include "mvpt/model/rollout.hpp"
#include "mvpt/numcore/gradcheck.hpp"
#include "mvpt/numcore/ops.hpp"
#include "mvpt/objective/losses.hpp"
#include "support/composite_gradcheck.hpp"

using namespace mvpt;
using model::Architecture;
using model::ModelConfig;
using numcore::Tensor;

namespace {

ModelConfig small_config(bool temporal_v = true) {
  ModelConfig c;
  c.d_in_v = 6;
  c.d_in_m = 5;
  c.d_h = 16;
  c.heads = 2;
  c.layers = 2;
  c.max_len = 12;
  c.temporal_embedding_v = temporal_v;
  return c;
}

FeatureSequence random_seq(std::mt19937_64& rng, std::size_t len, std::size_t dim, Modality m) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  FeatureSequence s;
  s.track_id = "x";
  s.modality = m;
  s.features = Matrix(len, dim);
  for (auto& v : s.features.values) v = n(rng);
  return s;
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
  return d;
}

// Direct product of (0.5 A + 0.5 I), rows renormalized, as an oracle.
std::vector<double> rollout_oracle(const model::AttentionMaps& maps) {
  const std::size_t n = maps.front().front().rows;
  std::vector<double> joint(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) joint[i * n + i] = 1.0;
  for (const auto& layer : maps) {
    std::vector<double> a(n * n, 0.0);
    for (const auto& h : layer)
      for (std::size_t i = 0; i < n * n; ++i) a[i] += h.values[i] / static_cast<double>(layer.size());
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        a[i * n + j] = 0.5 * a[i * n + j] + (i == j ? 0.5 : 0.0);
        s += a[i * n + j];
      }
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= s;
    }
    std::vector<double> next(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) next[i * n + j] += a[i * n + k] * joint[k * n + j];
    joint = next;
  }
  std::vector<double> w(joint.begin() + 1, joint.begin() + static_cast<long>(n));
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

model::AttentionMaps random_maps(std::mt19937_64& rng, std::size_t layers, std::size_t heads, std::size_t n) {
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  model::AttentionMaps maps(layers, std::vector<Matrix>(heads, Matrix(n, n)));
  for (auto& layer : maps)
    for (auto& h : layer)
      for (std::size_t i = 0; i < n; ++i) {
        float s = 0.0f;
        for (std::size_t j = 0; j < n; ++j) s += h(i, j) = u(rng);
        for (std::size_t j = 0; j < n; ++j) h(i, j) /= s;
      }
  return maps;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("config validation") {
    auto c = small_config();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.temperature = 0.0f;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.max_len = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("parameter count matches the closed form") {
    const auto c = small_config();
    const auto m = model::init_model<float>(c, 1);
    CHECK(m.parameter_count(Modality::kVisual) == model::transformer_parameter_count(c, Modality::kVisual));
    CHECK(m.parameter_count(Modality::kMusic) == model::transformer_parameter_count(c, Modality::kMusic));
  }

  TEST_CASE("mlp baseline is parameter matched within 2%") {
    for (std::size_t dh : {8u, 32u, 256u}) {
      auto c = small_config();
      c.d_h = dh;
      c.max_len = 30;
      const auto t = model::init_model<float>(c, 1);
      c.arch = Architecture::kMlp;
      const auto m = model::init_model<float>(c, 1);
      for (auto mod : {Modality::kVisual, Modality::kMusic}) {
        const double ratio = static_cast<double>(m.parameter_count(mod)) / static_cast<double>(t.parameter_count(mod));
        CHECK(std::abs(ratio - 1.0) < 0.02);
      }
    }
  }

  TEST_CASE("mlp_encode contracts") {
    auto c = small_config();
    c.arch = Architecture::kMlp;
    const auto m = model::init_model<float>(c, 4);
    const std::vector<float> zero(c.d_in_v, 0.0f), x{1, 2, 3, 4, 5, 6};
    // Layer 1 pre-activation of a zero input is the (zero) bias.
    for (float b : m.visual.mlp_b1.data()) CHECK(b == 0.0f);
    const auto y0 = model::mlp_encode(zero, m, Modality::kVisual);
    for (float v : y0) CHECK(v == 0.0f);
    CHECK(model::mlp_encode(x, m, Modality::kVisual) == model::mlp_encode(x, m, Modality::kVisual));
    CHECK_THROWS_AS(model::mlp_encode(std::vector<float>(3), m, Modality::kVisual), ShapeError);
  }

  TEST_CASE("permutation equivariance without temporal embeddings") {
    const auto m = model::init_model<float>(small_config(false), 7);
    std::mt19937_64 rng(8);
    const auto seq = random_seq(rng, 9, 6, Modality::kVisual);
    const auto base = model::encode(seq, m);
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int trial = 0; trial < 50; ++trial) {
      std::shuffle(perm.begin(), perm.end(), rng);
      auto p = seq;
      for (std::size_t l = 0; l < 9; ++l)
        std::copy(seq.features.row(perm[l]).begin(), seq.features.row(perm[l]).end(), p.features.row(l).begin());
      const auto e = model::encode(p, m);
      CHECK(max_abs_diff(e.track, base.track) <= 1e-5);
      for (std::size_t l = 0; l < 9; ++l) CHECK(max_abs_diff(e.per_segment.row(l), base.per_segment.row(perm[l])) <= 1e-5);
    }
  }

  TEST_CASE("temporal embeddings break equivariance") {
    const auto m = model::init_model<float>(small_config(true), 7);
    std::mt19937_64 rng(8);
    const auto seq = random_seq(rng, 9, 6, Modality::kVisual);
    const auto base = model::encode(seq, m);
    auto p = seq;
    for (std::size_t l = 0; l < 9; ++l)
      std::copy(seq.features.row(8 - l).begin(), seq.features.row(8 - l).end(), p.features.row(l).begin());
    const auto e = model::encode(p, m);
    double worst = 0.0;
    for (std::size_t l = 0; l < 9; ++l) worst = std::max(worst, max_abs_diff(e.per_segment.row(l), base.per_segment.row(8 - l)));
    CHECK(worst > 1e-3);
  }

  TEST_CASE("shape contracts and errors") {
    const auto m = model::init_model<float>(small_config(), 2);
    std::mt19937_64 rng(1);
    model::AttentionMaps maps;
    const auto e = model::encode(random_seq(rng, 1, 6, Modality::kVisual), m, &maps);
    CHECK(e.per_segment.rows == 1);
    CHECK(e.track.size() == 16);
    REQUIRE(maps.size() == 2);
    for (const auto& layer : maps) {
      REQUIRE(layer.size() == 2);
      for (const auto& h : layer) CHECK((h.rows == 2 && h.cols == 2));
    }
    CHECK_THROWS_AS(model::encode(random_seq(rng, 13, 6, Modality::kVisual), m), ShapeError);
    CHECK_THROWS_AS(model::encode(random_seq(rng, 4, 5, Modality::kVisual), m), ShapeError);
  }

  TEST_CASE("encode is deterministic and input dependent") {
    const auto m = model::init_model<float>(small_config(), 3);
    const auto m2 = model::init_model<float>(small_config(), 3);
    std::mt19937_64 rng(4);
    const auto a = random_seq(rng, 5, 5, Modality::kMusic), b = random_seq(rng, 5, 5, Modality::kMusic);
    const auto ea = model::encode(a, m);
    CHECK(ea.per_segment == model::encode(a, m2).per_segment);
    CHECK(ea.track == model::encode(a, m).track);
    CHECK(max_abs_diff(ea.track, model::encode(b, m).track) > 1e-4);
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    for (auto arch : {Architecture::kTransformer, Architecture::kMlp}) {
      auto c = small_config();
      c.arch = arch;
      const auto m = model::init_model<float>(c, 5);
      const auto bytes = model::serialize_checkpoint(m);
      const auto back = model::deserialize_checkpoint(bytes);
      CHECK(back.config == m.config);
      const auto pa = m.parameters(), pb = back.parameters();
      REQUIRE(pa.size() == pb.size());
      for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].first == pb[i].first);
        CHECK(std::equal(pa[i].second.data().begin(), pa[i].second.data().end(), pb[i].second.data().begin()));
      }
      CHECK(model::serialize_checkpoint(back) == bytes);
    }
  }

  TEST_CASE("checkpoint format errors") {
    const auto bytes = model::serialize_checkpoint(model::init_model<float>(small_config(), 5));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(model::deserialize_checkpoint(bad), FormatError);
    auto cut = std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 7);
    CHECK_THROWS_AS(model::deserialize_checkpoint(cut), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(model::deserialize_checkpoint(extra), FormatError);
  }

  TEST_CASE("rollout closed forms") {
    for (std::size_t len : {1u, 3u, 8u}) {
      const std::size_t n = len + 1;
      model::AttentionMaps uniform(1, std::vector<Matrix>(2, Matrix(n, n, 1.0f / static_cast<float>(n))));
      const auto r = model::attention_rollout(uniform);
      CHECK_FALSE(r.degenerate);
      for (double w : r.weights) CHECK(w == doctest::Approx(1.0 / static_cast<double>(len)).epsilon(1e-9));
    }
    model::AttentionMaps eye(3, std::vector<Matrix>(2, Matrix(4, 4)));
    for (auto& l : eye)
      for (auto& h : l)
        for (std::size_t i = 0; i < 4; ++i) h(i, i) = 1.0f;
    const auto r = model::attention_rollout(eye);
    CHECK(r.degenerate);
    CHECK(r.weights.size() == 3);
    model::AttentionMaps bad(1, std::vector<Matrix>(1, Matrix(3, 3, 0.5f)));
    CHECK_THROWS_AS(model::attention_rollout(bad), ValueError);
  }

  TEST_CASE("rollout matches a matrix-product oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const auto maps = random_maps(rng, 1 + trial % 4, 1 + trial % 3, 2 + trial % 9);
      const auto r = model::attention_rollout(maps);
      const auto expect = rollout_oracle(maps);
      REQUIRE(r.weights.size() == expect.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::abs(r.weights[i] - expect[i]) < 1e-6);
        CHECK(r.weights[i] >= 0.0);
        sum += r.weights[i];
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }

  TEST_CASE("rollout of a real forward pass") {
    const auto m = model::init_model<float>(small_config(), 9);
    std::mt19937_64 rng(2);
    model::AttentionMaps maps;
    model::encode(random_seq(rng, 7, 6, Modality::kVisual), m, &maps);
    const auto r = model::attention_rollout(maps);
    CHECK(r.weights.size() == 7);
    CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("encoder plus infonce gradient matches finite differences") {
    ModelConfig c;
    c.d_in_v = 3;
    c.d_in_m = 3;
    c.d_h = 8;
    c.heads = 2;
    c.layers = 1;
    c.max_len = 4;
    const auto r = testing::composite_gradcheck(c, 4, 13);
    INFO("weights " << r.weights64 << "/" << r.weights32 << " inputs " << r.inputs64 << "/" << r.inputs32);
    CHECK(r.weights64 < 1e-5);
    CHECK(r.weights32 < 1e-3);
    CHECK(r.inputs64 < 1e-5);
    CHECK(r.inputs32 < 1e-3);
    CHECK(r.qkv_bias64 < 1e-5);
    CHECK(r.key_bias_grad < 1e-12);
  }
}
