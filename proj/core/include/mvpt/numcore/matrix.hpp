#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvpt {

// Plain row-major float matrix for data that never needs gradients:
// features on disk, embeddings handed to evaluation.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}

  float& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<float> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  bool empty() const { return rows == 0 || cols == 0; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace mvpt
