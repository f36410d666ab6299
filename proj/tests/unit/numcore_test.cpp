#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mvpt/error.hpp"
#include "mvpt/numcore/gradcheck.hpp"
#include "mvpt/numcore/ops.hpp"
#include "support/primitives.hpp"

namespace nc = mvpt::numcore;
using mvpt::testing::contract;
using mvpt::testing::primitives;
using mvpt::testing::random_tensor;

TEST_SUITE("numcore") {
  TEST_CASE("matmul with identity returns the operand") {
    std::mt19937_64 rng(1);
    auto a = random_tensor<float>(rng, {3, 5});
    auto left = nc::matmul(nc::Tensor<float>::identity(3), a);
    auto right = nc::matmul(a, nc::Tensor<float>::identity(5));
    for (std::size_t i = 0; i < a.numel(); ++i) {
      CHECK(left.data()[i] == a.data()[i]);
      CHECK(right.data()[i] == a.data()[i]);
    }
  }

  TEST_CASE("softmax of zeros is uniform") {
    auto y = nc::softmax_rows(nc::Tensor<float>::zeros({3}));
    for (float v : y.data()) CHECK(v == doctest::Approx(1.0f / 3.0f).epsilon(1e-7));
  }

  TEST_CASE("softmax rows are distributions") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      auto x = random_tensor<float>(rng, {4, 7}, -20.0, 20.0);
      auto y = nc::softmax_rows(x);
      for (std::size_t r = 0; r < 4; ++r) {
        double total = 0;
        for (std::size_t c = 0; c < 7; ++c) {
          CHECK(y.at(r, c) >= 0.0f);
          total += y.at(r, c);
        }
        CHECK(std::abs(total - 1.0) <= 1e-5);
      }
    }
  }

  TEST_CASE("layer norm maps a constant row to zero") {
    auto x = nc::Tensor<float>::full({1, 6}, 2.5f);
    auto y = nc::layer_norm(x, nc::Tensor<float>::full({6}, 1.0f), nc::Tensor<float>::zeros({6}));
    for (float v : y.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("shape errors name the kernel and shapes") {
    auto a = nc::Tensor<float>::zeros({2, 3});
    auto b = nc::Tensor<float>::zeros({2, 3});
    try {
      nc::matmul(a, b);
      FAIL("expected ShapeError");
    } catch (const mvpt::ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("matmul") != std::string::npos);
      CHECK(msg.find("[2,3]") != std::string::npos);
    }
    CHECK_THROWS_AS(nc::add(a, nc::Tensor<float>::zeros({3, 2})), mvpt::ShapeError);
    CHECK_THROWS_AS(nc::Tensor<float>::zeros({2, 0}), mvpt::ShapeError);
  }

  TEST_CASE("backward of sum of squares") {
    auto x = nc::Tensor<float>::from({2}, {1.0f, 2.0f}, true);
    nc::Tape<float> tape;
    nc::Tape<float>::Scope scope(tape);
    auto loss = nc::sum(nc::mul(x, x));
    auto grads = nc::backward(tape, loss);
    auto g = grads.at(x);
    CHECK(g.data()[0] == doctest::Approx(2.0f));
    CHECK(g.data()[1] == doctest::Approx(4.0f));
  }

  TEST_CASE("cosine of a vector with itself is stationary") {
    auto v = nc::Tensor<double>::from({1, 4}, {0.3, -1.2, 0.7, 2.0}, true);
    nc::Tape<double> tape;
    nc::Tape<double>::Scope scope(tape);
    auto n = nc::normalize_rows(v);
    auto loss = nc::sum(nc::mul(n, n));
    auto g = nc::backward(tape, loss).at(v);
    for (double x : g.data()) CHECK(std::abs(x) < 1e-12);
  }

  TEST_CASE("backward rejects non-scalar and detached losses") {
    auto x = nc::Tensor<float>::from({2}, {1.0f, 2.0f}, true);
    nc::Tape<float> tape;
    {
      nc::Tape<float>::Scope scope(tape);
      auto y = nc::mul(x, x);
      CHECK_THROWS_AS(nc::backward(tape, y), mvpt::ShapeError);
    }
    nc::Tape<float> empty;
    auto detached = nc::sum(x);  // no active tape: nothing recorded
    CHECK_THROWS_AS(nc::backward(empty, detached), mvpt::ValueError);
    CHECK_THROWS_AS(nc::backward(tape, detached), mvpt::ValueError);
  }

  TEST_CASE("grad_check on x*x at 3") {
    std::vector<nc::Tensor<double>> point{nc::Tensor<double>::scalar(3.0)};
    nc::ScalarFunction<double> f = [](const std::vector<nc::Tensor<double>>& x) {
      return nc::mul(x[0], x[0]);
    };
    CHECK(nc::grad_check(f, point, 1e-4) < 1e-6);
  }

  TEST_CASE("grad_check rejects non-finite values") {
    std::vector<nc::Tensor<double>> point{nc::Tensor<double>::scalar(-1.0)};
    nc::ScalarFunction<double> f = [](const std::vector<nc::Tensor<double>>& x) {
      return nc::log(x[0]);
    };
    CHECK_THROWS_AS(nc::grad_check(f, point, 1e-4), mvpt::ValueError);
  }

  TEST_CASE("every primitive matches central differences on 100 random cases") {
    const auto prims = primitives();
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    for (const auto& prim : prims) {
      double worst64 = 0.0, worst32 = 0.0;
      for (unsigned trial = 0; trial < 100; ++trial) {
        const std::size_t r = dim(rng), c = dim(rng) + 1;
        auto inputs = prim.inputs(rng, r, c);
        nc::ScalarFunction<double> f64 = [&](const std::vector<nc::Tensor<double>>& x) {
          return contract(prim.apply64(x), trial);
        };
        nc::ScalarFunction<float> f32 = [&](const std::vector<nc::Tensor<float>>& x) {
          return contract(prim.apply32(x), trial);
        };
        std::vector<nc::Tensor<float>> inputs32;
        for (const auto& t : inputs) {
          inputs32.push_back(
              nc::Tensor<float>::from(t.shape(), {t.data().begin(), t.data().end()}));
        }
        worst64 = std::max(worst64, nc::grad_check(f64, inputs, 1e-6));
        worst32 = std::max(worst32, nc::grad_check_mixed(f32, f64, inputs32, 1e-4));
      }
      INFO("primitive " << prim.name << " worst64 " << worst64 << " worst32 " << worst32);
      CHECK(worst64 < 1e-5);
      CHECK(worst32 < 1e-3);
    }
  }

  TEST_CASE("random two-layer network matches finite differences") {
    std::mt19937_64 rng(7);
    auto make = [&] {
      return std::vector<nc::Tensor<double>>{
          random_tensor<double>(rng, {5, 6}), random_tensor<double>(rng, {6, 8}),
          random_tensor<double>(rng, {8}), random_tensor<double>(rng, {8, 3}),
          random_tensor<double>(rng, {3})};
    };
    auto net = [](const auto& p) {
      auto h = nc::gelu(nc::add(nc::matmul(p[0], p[1]), p[2]));
      auto y = nc::add(nc::matmul(h, p[3]), p[4]);
      return nc::sum(nc::mul(y, y));
    };
    nc::ScalarFunction<double> f64 = net;
    nc::ScalarFunction<float> f32 = net;
    for (int trial = 0; trial < 5; ++trial) {
      auto point = make();
      std::vector<nc::Tensor<float>> point32;
      for (const auto& t : point)
        point32.push_back(nc::Tensor<float>::from(t.shape(), {t.data().begin(), t.data().end()}));
      CHECK(nc::grad_check(f64, point, 1e-6) < 1e-5);
      CHECK(nc::grad_check_mixed(f32, f64, point32, 1e-4) < 1e-3);
    }
  }

  TEST_CASE("backward is linear in the loss") {
    std::mt19937_64 rng(9);
    auto x = random_tensor<float>(rng, {3, 4});
    x.set_requires_grad(true);
    auto f1 = [](const nc::Tensor<float>& t) { return nc::sum(nc::gelu(t)); };
    auto f2 = [](const nc::Tensor<float>& t) { return nc::sum(nc::softmax_rows(nc::mul(t, t))); };
    auto grad_of = [&](auto fn) {
      nc::Tape<float> tape;
      nc::Tape<float>::Scope scope(tape);
      x.zero_grad();
      auto g = nc::backward(tape, fn(x)).at(x);
      x.zero_grad();
      return std::vector<float>(g.data().begin(), g.data().end());
    };
    auto g1 = grad_of(f1);
    auto g2 = grad_of(f2);
    auto g12 = grad_of([&](const nc::Tensor<float>& t) { return nc::add(f1(t), f2(t)); });
    for (std::size_t i = 0; i < g12.size(); ++i) CHECK(std::abs(g12[i] - (g1[i] + g2[i])) <= 1e-5);
  }

  TEST_CASE("repeated runs are bit-identical") {
    std::mt19937_64 rng(11);
    auto a = random_tensor<float>(rng, {17, 9});
    auto b = random_tensor<float>(rng, {9, 13});
    auto c1 = nc::softmax_rows(nc::matmul(a, b));
    auto c2 = nc::softmax_rows(nc::matmul(a, b));
    for (std::size_t i = 0; i < c1.numel(); ++i) CHECK(c1.data()[i] == c2.data()[i]);
  }
}
