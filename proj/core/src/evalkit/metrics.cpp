#include "mvpt/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mvpt/error.hpp"
#include "mvpt/objective/losses.hpp"

namespace mvpt::evalkit {

std::size_t rank_of_truth(std::span<const double> scores, std::size_t truth_index) {
  if (truth_index >= scores.size()) throw ValueError("rank: truth index out of range");
  const double truth = scores[truth_index];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > truth || (scores[j] == truth && j < truth_index)) ++rank;
  }
  return rank;
}

std::size_t rank_ground_truth(std::span<const float> query,
                              const std::vector<std::span<const float>>& candidates,
                              std::size_t truth_index) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.size() != query.size()) {
      throw ShapeError("rank_ground_truth: candidate dim " + std::to_string(c.size()) +
                       " differs from query dim " + std::to_string(query.size()));
    }
    scores.push_back(objective::cosine_similarity(query, c));
  }
  return rank_of_truth(scores, truth_index);
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) return 0.0;
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::size_t median_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ValueError("median_rank: no ranks");
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  const std::size_t mid = (sorted.size() + 1) / 2 - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  return sorted[mid];
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValueError("spearman: need two equal series of length >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mvpt::evalkit
