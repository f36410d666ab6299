#include "mvpt/objective/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvpt/error.hpp"
#include "mvpt/numcore/ops.hpp"

namespace mvpt::objective {

std::string_view to_string(Level l) { return l == Level::kSegment ? "segment" : "track"; }

Level parse_level(std::string_view text) {
  if (text == "segment") return Level::kSegment;
  if (text == "track") return Level::kTrack;
  throw ConfigError("unknown level '" + std::string(text) + "' (expected segment|track)");
}

std::string_view to_string(LossKind k) { return k == LossKind::kInfoNce ? "infonce" : "triplet"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "infonce") return LossKind::kInfoNce;
  if (text == "triplet") return LossKind::kTriplet;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected infonce|triplet)");
}

namespace nc = numcore;

namespace {

constexpr double kNormFloor = 1e-8;

template <typename T>
void check_finite(const Tensor<T>& t, const char* what) {
  for (T v : t.data()) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw NonFiniteError(std::string("infonce: non-finite value in ") + what + " embeddings");
    }
  }
}

// Row-wise cosine similarity of two equally shaped matrices, rows x 1.
template <typename T>
Tensor<T> row_cosine(const Tensor<T>& a, const Tensor<T>& b) {
  return nc::sum_axis(nc::mul(nc::normalize_rows(a, T(kNormFloor)),
                              nc::normalize_rows(b, T(kNormFloor))),
                      1);
}

}  // namespace

void LossConfig::validate() const {
  if (!(temperature > 0.0f)) throw ConfigError("loss: temperature must be positive");
  if (!(margin >= 0.0f)) throw ConfigError("loss: margin must be non-negative");
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_similarity: dims differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / (std::max(std::sqrt(na), kNormFloor) * std::max(std::sqrt(nb), kNormFloor));
}

template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) {
    throw ShapeError("cosine_similarity: dims differ (" + nc::shape_string(a.shape()) + " vs " +
                     nc::shape_string(b.shape()) + ")");
  }
  auto ra = a.rows() == 1 ? a : nc::transpose(a);
  auto rb = b.rows() == 1 ? b : nc::transpose(b);
  return nc::sum(row_cosine(ra, rb));
}

template <typename T>
LossParts<T> infonce(const Tensor<T>& visual, const Tensor<T>& music, T temperature) {
  if (visual.shape() != music.shape()) {
    throw ShapeError("infonce: visual " + nc::shape_string(visual.shape()) + " and music " +
                     nc::shape_string(music.shape()) + " differ");
  }
  const std::size_t m = visual.rows();
  if (m < 2) throw ShapeError("infonce: need at least 2 pairs, got " + std::to_string(m));
  if (!(temperature > T{0})) throw ValueError("infonce: temperature must be positive");
  check_finite(visual, "visual");
  check_finite(music, "music");

  auto v = nc::normalize_rows(visual, T(kNormFloor));
  auto u = nc::normalize_rows(music, T(kNormFloor));
  auto logits = nc::scale(nc::matmul(v, nc::transpose(u)), T{1} / temperature);
  const auto eye = Tensor<T>::identity(m);
  const T inv_m = T{1} / static_cast<T>(m);
  auto direction = [&](const Tensor<T>& l) {
    return nc::scale(nc::sum(nc::mul(nc::log_softmax_rows(l), eye)), -inv_m);
  };
  LossParts<T> out;
  out.v2m = direction(logits);
  out.m2v = direction(nc::transpose(logits));
  out.total = nc::add(out.v2m, out.m2v);
  return out;
}

template <typename T>
Tensor<T> triplet(const Tensor<T>& anchor, const Tensor<T>& positive, const Tensor<T>& negative,
                  T margin) {
  if (anchor.shape() != positive.shape() || anchor.shape() != negative.shape()) {
    throw ShapeError("triplet: shapes differ, anchor " + nc::shape_string(anchor.shape()) +
                     ", positive " + nc::shape_string(positive.shape()) + ", negative " +
                     nc::shape_string(negative.shape()));
  }
  if (margin < T{0}) throw ValueError("triplet: margin must be non-negative");
  auto gap = nc::sub(row_cosine(anchor, negative), row_cosine(anchor, positive));
  return nc::mean(nc::relu(nc::add_scalar(gap, margin)));
}

template Tensor<float> cosine_similarity<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> cosine_similarity<double>(const Tensor<double>&, const Tensor<double>&);
template LossParts<float> infonce<float>(const Tensor<float>&, const Tensor<float>&, float);
template LossParts<double> infonce<double>(const Tensor<double>&, const Tensor<double>&, double);
template Tensor<float> triplet<float>(const Tensor<float>&, const Tensor<float>&,
                                      const Tensor<float>&, float);
template Tensor<double> triplet<double>(const Tensor<double>&, const Tensor<double>&,
                                        const Tensor<double>&, double);

}  // namespace mvpt::objective
