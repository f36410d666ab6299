#pragma once

// Differentiable kernels. All reductions accumulate in index order so that
// results are bit-reproducible; matmul accumulates over the inner dimension
// from k = 0 upwards for every output element.
//
// Broadcast rule for binary elementwise ops (add, sub, mul, div): the result
// has the left operand's shape. The right operand must either have the same
// shape, be a row vector (1 x cols) repeated over rows, be a column vector
// (rows x 1) repeated over columns, or be a single value.

#include <cstddef>
#include <span>
#include <vector>

#include "mvpt/numcore/tensor.hpp"

namespace mvpt::numcore {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value);
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor);

template <typename T>
Tensor<T> exp(const Tensor<T>& a);
template <typename T>
Tensor<T> log(const Tensor<T>& a);
template <typename T>
Tensor<T> relu(const Tensor<T>& a);
// tanh approximation
template <typename T>
Tensor<T> gelu(const Tensor<T>& a);

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a);
template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a);
// Normalizes each row to zero mean and unit variance (population variance
// plus eps), then applies per-column gain and bias (1 x cols each).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5));

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
// Half-open ranges [begin, end).
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, std::span<const std::size_t> indices);

// Sum of all elements, shape [].
template <typename T>
Tensor<T> sum(const Tensor<T>& a);
// axis 0 collapses rows (result 1 x cols), axis 1 collapses columns
// (result rows x 1).
template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, int axis);
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, int axis);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);
// Euclidean norm of every row, rows x 1.
template <typename T>
Tensor<T> l2_norm_rows(const Tensor<T>& a);

// Rows scaled to unit norm with the norm floored at `floor`.
template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& a, T floor = T(1e-8));

}  // namespace mvpt::numcore
