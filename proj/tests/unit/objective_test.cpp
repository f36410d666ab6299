#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mvpt/error.hpp"
#include "mvpt/numcore/gradcheck.hpp"
#include "mvpt/numcore/ops.hpp"
#include "mvpt/objective/losses.hpp"

namespace nc = mvpt::numcore;
namespace ob = mvpt::objective;
using mvpt::numcore::Tensor;

namespace {

template <typename T>
Tensor<T> random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, bool grad = false) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<T> v(r * c);
  for (auto& x : v) x = static_cast<T>(n(rng));
  return Tensor<T>::from({r, c}, std::move(v), grad);
}

double brute_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / (std::max(std::sqrt(na), 1e-8) * std::max(std::sqrt(nb), 1e-8));
}

std::vector<double> row(const Tensor<double>& t, std::size_t r) {
  return {t.data().begin() + static_cast<long>(r * t.cols()), t.data().begin() + static_cast<long>((r + 1) * t.cols())};
}

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("cosine similarity closed forms") {
    const std::vector<float> v{0.3f, -1.2f, 2.0f}, neg{-0.3f, 1.2f, -2.0f};
    const std::vector<float> e0{1, 0}, e1{0, 1}, zero{0, 0};
    CHECK(ob::cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ob::cosine_similarity(e0, e1) == 0.0);
    CHECK(ob::cosine_similarity(v, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ob::cosine_similarity(zero, e1) == 0.0);
    CHECK_THROWS_AS(ob::cosine_similarity(v, e0), mvpt::ShapeError);
  }

  TEST_CASE("infonce of identical embeddings is 2 ln M") {
    for (std::size_t m : {2u, 4u, 16u}) {
      auto same = Tensor<float>::full({m, 5}, 0.7f);
      const auto parts = ob::infonce(same, same, 0.3f);
      CHECK(parts.total.item() == doctest::Approx(2.0 * std::log(static_cast<double>(m))).epsilon(1e-5));
      CHECK(parts.v2m.item() == doctest::Approx(std::log(static_cast<double>(m))).epsilon(1e-5));
    }
  }

  TEST_CASE("infonce on orthonormal pairs, tau 1") {
    auto eye = Tensor<double>::identity(2);
    const auto parts = ob::infonce(eye, eye, 1.0);
    CHECK(parts.v2m.item() == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(parts.m2v.item() == doctest::Approx(0.31326).epsilon(1e-4));
  }

  TEST_CASE("infonce errors") {
    auto one = Tensor<float>::full({1, 3}, 1.0f);
    CHECK_THROWS_AS(ob::infonce(one, one, 0.3f), mvpt::ShapeError);
    auto bad = Tensor<float>::full({3, 2}, 1.0f);
    bad.mutable_data()[1] = std::nanf("");
    auto good = Tensor<float>::full({3, 2}, 1.0f);
    CHECK_THROWS_AS(ob::infonce(bad, good, 0.3f), mvpt::ValueError);
    CHECK_THROWS_AS(ob::infonce(good, Tensor<float>::full({3, 3}, 1.0f), 0.3f), mvpt::ShapeError);
  }

  TEST_CASE("infonce is scale invariant and symmetric over 100 random batches") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t m = 2 + trial % 7, d = 3 + trial % 5;
      auto v = random_matrix<double>(rng, m, d), u = random_matrix<double>(rng, m, d);
      const auto base = ob::infonce(v, u, 0.3);
      auto scaled = Tensor<double>::from(v.shape(), {v.data().begin(), v.data().end()});
      const std::size_t r = static_cast<std::size_t>(trial) % m;
      const double c = 0.1 + 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      for (std::size_t k = 0; k < d; ++k) scaled.mutable_data()[r * d + k] *= c;
      CHECK(ob::infonce(scaled, u, 0.3).total.item() == doctest::Approx(base.total.item()).epsilon(1e-5));
      const auto swapped = ob::infonce(u, v, 0.3);
      CHECK(swapped.v2m.item() == base.m2v.item());
      CHECK(swapped.m2v.item() == base.v2m.item());
    }
  }

  TEST_CASE("infonce bound when positives dominate by delta") {
    // Positives at similarity 1, negatives at 1 - delta or below.
    std::mt19937_64 rng(3);
    const std::size_t m = 6;
    auto eye = Tensor<double>::identity(m);
    const double tau = 0.3, delta = 1.0;  // orthonormal: negatives at 0
    const auto parts = ob::infonce(eye, eye, tau);
    const double bound = std::log(1.0 + (m - 1) * std::exp(-delta / tau));
    CHECK(parts.v2m.item() < bound + 1e-12);
    CHECK(parts.m2v.item() < bound + 1e-12);
  }

  TEST_CASE("one gradient step lowers infonce") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      auto v = random_matrix<double>(rng, 6, 4, true), u = random_matrix<double>(rng, 6, 4, true);
      nc::Tape<double> tape;
      double before;
      {
        nc::Tape<double>::Scope s(tape);
        auto loss = ob::infonce(v, u, 0.3).total;
        before = loss.item();
        nc::backward(tape, loss);
      }
      auto step = [](Tensor<double>& t) {
        std::vector<double> x(t.data().begin(), t.data().end());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= 1e-3 * t.grad()[i];
        return Tensor<double>::from(t.shape(), x);
      };
      CHECK(ob::infonce(step(v), step(u), 0.3).total.item() < before);
    }
  }

  TEST_CASE("infonce gradient matches finite differences") {
    std::mt19937_64 rng(9);
    auto f64 = [](const std::vector<Tensor<double>>& p) { return ob::infonce(p[0], p[1], 0.3).total; };
    auto f32 = [](const std::vector<Tensor<float>>& p) { return ob::infonce(p[0], p[1], 0.3f).total; };
    std::vector<Tensor<double>> p64{random_matrix<double>(rng, 4, 5, true), random_matrix<double>(rng, 4, 5, true)};
    CHECK(nc::grad_check<double>(f64, p64, 1e-6) < 1e-5);
    std::vector<Tensor<float>> p32{random_matrix<float>(rng, 4, 5, true), random_matrix<float>(rng, 4, 5, true)};
    CHECK(nc::grad_check_mixed(f32, f64, p32, 1e-4) < 1e-3);
  }

  TEST_CASE("triplet closed forms") {
    auto a = Tensor<float>::from({1, 2}, {1, 0});
    auto p = Tensor<float>::from({1, 2}, {2, 0});
    auto n = Tensor<float>::from({1, 2}, {-1, 0});
    CHECK(ob::triplet(a, p, n, 0.2f).item() == 0.0f);
    CHECK(ob::triplet(a, a, a, 0.2f).item() == doctest::Approx(0.2f).epsilon(1e-6));
    CHECK_THROWS_AS(ob::triplet(a, p, Tensor<float>::from({1, 3}, {1, 0, 0}), 0.2f), mvpt::ShapeError);
  }

  TEST_CASE("triplet matches a scalar oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t m = 1 + trial % 8, d = 2 + trial % 6;
      auto a = random_matrix<double>(rng, m, d), p = random_matrix<double>(rng, m, d), n = random_matrix<double>(rng, m, d);
      double expect = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        expect += std::max(0.0, 0.2 - brute_cos(row(a, i), row(p, i)) + brute_cos(row(a, i), row(n, i)));
      }
      expect /= static_cast<double>(m);
      CHECK(ob::triplet(a, p, n, 0.2).item() == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}
