#include "mvpt/model/rollout.hpp"

#include <cmath>
#include <string>

#include "mvpt/error.hpp"

namespace mvpt::model {

namespace {

using Square = std::vector<double>;  // n x n row-major

Square head_average(const std::vector<Matrix>& heads, std::size_t layer) {
  if (heads.empty()) throw ValueError("attention_rollout: layer " + std::to_string(layer) + " has no heads");
  const std::size_t n = heads.front().rows;
  Square avg(n * n, 0.0);
  for (const auto& h : heads) {
    if (h.rows != n || h.cols != n) {
      throw ShapeError("attention_rollout: layer " + std::to_string(layer) +
                       " has heads of differing or non-square shape");
    }
    for (std::size_t i = 0; i < n * n; ++i) avg[i] += h.values[i];
  }
  for (auto& v : avg) v /= static_cast<double>(heads.size());
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (avg[r * n + c] < -1e-4) {
        throw ValueError("attention_rollout: negative attention in layer " + std::to_string(layer));
      }
      total += avg[r * n + c];
    }
    if (std::abs(total - 1.0) > 1e-4) {
      throw ValueError("attention_rollout: layer " + std::to_string(layer) + " row " +
                       std::to_string(r) + " sums to " + std::to_string(total));
    }
  }
  return avg;
}

}  // namespace

RolloutResult attention_rollout(const AttentionMaps& maps) {
  if (maps.empty()) throw ValueError("attention_rollout: no layers");
  const std::size_t n = maps.front().empty() ? 0 : maps.front().front().rows;
  if (n < 2) throw ShapeError("attention_rollout: need at least one segment besides [CLS]");

  Square joint;
  for (std::size_t l = 0; l < maps.size(); ++l) {
    Square a = head_average(maps[l], l);
    if (std::sqrt(static_cast<double>(a.size())) != static_cast<double>(n)) {
      throw ShapeError("attention_rollout: layers disagree on sequence length");
    }
    for (std::size_t r = 0; r < n; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        a[r * n + c] = 0.5 * a[r * n + c] + (r == c ? 0.5 : 0.0);
        total += a[r * n + c];
      }
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] /= total;
    }
    if (joint.empty()) {
      joint = std::move(a);
      continue;
    }
    Square next(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) next[i * n + j] += a[i * n + k] * joint[k * n + j];
    joint = std::move(next);
  }

  RolloutResult out;
  out.weights.assign(n - 1, 0.0);
  double mass = 0.0;
  for (std::size_t j = 1; j < n; ++j) mass += joint[j];
  if (mass <= 1e-12) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t j = 1; j < n; ++j) out.weights[j - 1] = joint[j] / mass;
  return out;
}

}  // namespace mvpt::model
