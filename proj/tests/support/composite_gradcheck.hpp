#pragma once

// Gradient check of encoder + InfoNCE with respect to every weight and both
// inputs, in 64-bit and mixed 32-bit mode.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvpt/model/encoder.hpp"
#include "mvpt/numcore/gradcheck.hpp"
#include "mvpt/objective/losses.hpp"

namespace mvpt::testing {

struct CompositeCheck {
  double weights64 = 0.0;
  double weights32 = 0.0;
  double inputs64 = 0.0;
  double inputs32 = 0.0;
  // qkv_bias, coordinate by coordinate: query and value thirds against
  // central differences, and the largest |gradient| of the key third, which
  // must be zero (softmax is invariant to a per-row shift).
  double qkv_bias64 = 0.0;
  double key_bias_grad = 0.0;
  std::size_t coordinates = 0;
};

inline constexpr double kTensorFloor = 1e-3;

// `length` is the number of segments per modality; c.max_len must allow it.
inline CompositeCheck composite_gradcheck(const model::ModelConfig& c, std::size_t length, std::uint64_t seed) {
  using numcore::Tensor;
  auto m64 = model::init_model<double>(c, seed);
  // Move away from the tiny-weight init, where most gradients sit below the
  // finite-difference noise floor, to weights at the 1/sqrt(d_h) scale of a
  // trained layer. Much larger weights make the float forward pass itself
  // ill-conditioned.
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 1.0);
  const double weight_std = 1.0 / std::sqrt(static_cast<double>(c.d_h));
  for (auto& [name, t] : m64.parameters()) {
    if (name.find("gain") != std::string::npos) continue;
    for (auto& v : t.mutable_data()) v += weight_std * n(rng);
  }
  const auto m32 = model::convert_model<float>(m64);
  std::vector<double> fv(length * c.d_in_v), fm(length * c.d_in_m);
  for (auto& x : fv) x = n(rng);
  for (auto& x : fm) x = n(rng);

  // The probe point is a list of model parameters; f copies probe values into
  // the model (a no-op when the probe is the parameter itself).
  auto loss_fn = [](const auto& mdl, const auto& xv, const auto& xm, std::vector<std::size_t> which) {
    using T = typename std::decay_t<decltype(xv)>::value_type;
    return numcore::ScalarFunction<T>([&mdl, xv, xm, which](const std::vector<Tensor<T>>& p) {
      auto params = mdl.parameters();
      for (std::size_t i = 0; i < which.size(); ++i) {
        auto dst = params[which[i]].second;
        if (dst.impl() != p[i].impl()) std::copy(p[i].data().begin(), p[i].data().end(), dst.mutable_data().begin());
      }
      const auto v = model::encode_tensor(mdl, Modality::kVisual, xv);
      const auto u = model::encode_tensor(mdl, Modality::kMusic, xm);
      return objective::infonce(v.per_segment, u.per_segment, T(0.3)).total;
    });
  };
  const auto xv64 = Tensor<double>::from({length, c.d_in_v}, fv);
  const auto xm64 = Tensor<double>::from({length, c.d_in_m}, fm);
  const auto xv32 = Tensor<float>::from({length, c.d_in_v}, std::vector<float>(fv.begin(), fv.end()));
  const auto xm32 = Tensor<float>::from({length, c.d_in_m}, std::vector<float>(fm.begin(), fm.end()));

  CompositeCheck out;
  std::vector<std::size_t> which;
  const auto p64 = m64.parameters();
  const auto p32 = m32.parameters();
  std::vector<Tensor<double>> w64;
  std::vector<Tensor<float>> w32;
  for (std::size_t i = 0; i < p64.size(); ++i) {
    out.coordinates += p64[i].second.numel();
    if (p64[i].first.find("qkv_bias") != std::string::npos) continue;
    which.push_back(i);
    w64.push_back(p64[i].second);
    w32.push_back(p32[i].second);
  }
  const auto f64 = loss_fn(m64, xv64, xm64, which);
  // Some gradients are ~1e-8 of the loss, below what a central difference in
  // double can resolve at any step, so every coordinate is compared against at
  // least 1e-3 of its tensor's largest gradient. Step 1e-5 keeps truncation
  // and round-off under that.
  out.weights64 = numcore::grad_check<double>(f64, w64, 1e-5, kTensorFloor);
  // The double reference writes probe values into m64 (its last probe is a
  // perturbed one), so restore it afterwards.
  std::vector<std::vector<double>> snapshot;
  for (const auto& t : w64) snapshot.emplace_back(t.data().begin(), t.data().end());
  out.weights32 = numcore::grad_check_mixed(loss_fn(m32, xv32, xm32, which), f64, w32, 1e-4, kTensorFloor);
  for (std::size_t k = 0; k < w64.size(); ++k) {
    std::copy(snapshot[k].begin(), snapshot[k].end(), w64[k].mutable_data().begin());
  }

  numcore::ScalarFunction<double> fx64 = [&](const std::vector<Tensor<double>>& p) {
    return objective::infonce(model::encode_tensor(m64, Modality::kVisual, p[0]).per_segment,
                              model::encode_tensor(m64, Modality::kMusic, p[1]).per_segment, 0.3)
        .total;
  };
  numcore::ScalarFunction<float> fx32 = [&](const std::vector<Tensor<float>>& p) {
    return objective::infonce(model::encode_tensor(m32, Modality::kVisual, p[0]).per_segment,
                              model::encode_tensor(m32, Modality::kMusic, p[1]).per_segment, 0.3f)
        .total;
  };
  std::vector<Tensor<double>> x64{xv64.detach(), xm64.detach()};
  out.inputs64 = numcore::grad_check<double>(fx64, x64, 1e-5, kTensorFloor);
  std::vector<Tensor<float>> x32{xv32.detach(), xm32.detach()};
  out.inputs32 = numcore::grad_check_mixed(fx32, fx64, x32, 1e-4, kTensorFloor);

  // Leaf gradients accumulate across backward calls.
  for (auto& [name, t] : m64.parameters()) t.zero_grad();
  for (const auto& [name, bias] : m64.parameters()) {
    if (name.find("qkv_bias") == std::string::npos) continue;
    auto b = bias;
    numcore::Tape<double> tape;
    numcore::GradientMap<double> grads;
    {
      numcore::Tape<double>::Scope scope(tape);
      auto loss = fx64({xv64, xm64});
      grads = numcore::backward(tape, loss);
    }
    const auto g = grads.at(b);
    const std::size_t d = c.d_h;
    std::vector<double> cd(3 * d, 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < 3 * d; ++i) {
      if (i >= d && i < 2 * d) {
        out.key_bias_grad = std::max(out.key_bias_grad, std::abs(g.data()[i]));
        continue;
      }
      numcore::Tape<double>::Pause pause;
      const double saved = b.data()[i];
      b.mutable_data()[i] = saved + 1e-5;
      const double up = fx64({xv64, xm64}).item();
      b.mutable_data()[i] = saved - 1e-5;
      const double down = fx64({xv64, xm64}).item();
      b.mutable_data()[i] = saved;
      cd[i] = (up - down) / 2e-5;
      scale = std::max(scale, std::abs(cd[i]));
    }
    for (std::size_t i = 0; i < 3 * d; ++i) {
      if (i >= d && i < 2 * d) continue;
      const double a = g.data()[i];
      out.qkv_bias64 = std::max(out.qkv_bias64, std::abs(cd[i] - a) /
                                                    std::max({std::abs(cd[i]), std::abs(a), kTensorFloor * scale, 1e-8}));
    }
    for (auto& [n2, t] : m64.parameters()) t.zero_grad();
  }
  return out;
}

}  // namespace mvpt::testing
